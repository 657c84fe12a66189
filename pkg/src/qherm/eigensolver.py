"""Tridiagonal eigensolvers.

Two independent routes are provided:

* a Sturm-count bisection solver with inverse iteration for Hermitian
  (in practice real symmetric) tridiagonal matrices, and
* a simultaneous Aberth-Ehrlich root finder applied to the characteristic
  polynomial of an arbitrary complex tridiagonal or cyclic matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .errors import ContractError, ConvergenceError
from .lattice import (
    EigenPair,
    TridiagMatrix,
    char_poly_log10_abs,
    char_poly_with_derivative,
    root_residual,
)
from .symmetrizer import MetricDiagonal, symmetrize, transform_eigvec

EPS = np.finfo(np.float64).eps
DEFAULT_REALITY_TOL = 1e-9
MAX_SWEEPS = 500
MAX_INVERSE_ITERATIONS = 50
# eigenvalues closer than this fraction of the scale are reorthogonalized together
CLUSTER_GAP = 1e-3


# real parts closer than this (relative to the largest modulus) count as equal when sorting
ORDER_RESOLUTION = 1e-10


def canonical_order(values) -> np.ndarray:
    """Sort complex values by real part, then imaginary part.

    Real parts are compared on a grid of ``ORDER_RESOLUTION`` relative to the
    largest modulus, so conjugate pairs whose real parts differ only by
    rounding still come out with the negative imaginary part first.
    """
    values = np.asarray(values, dtype=np.complex128).reshape(-1)
    if values.size == 0:
        return values
    res = ORDER_RESOLUTION * (1.0 + float(np.max(np.abs(values))))
    snapped = np.round(values.real / res)
    return values[np.lexsort((values.real, values.imag, snapped))]


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in canonical order with a reality classification."""

    values: np.ndarray
    all_real: bool
    reality_tol: float

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.complex128).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_values(cls, values, reality_tol: float = DEFAULT_REALITY_TOL) -> "Spectrum":
        vals = canonical_order(values)
        real = bool(np.all(np.abs(vals.imag) <= reality_tol * (1.0 + np.abs(vals.real))))
        return cls(vals, real, reality_tol)

    def __len__(self):
        return self.values.size

    def max_imag(self) -> float:
        return float(np.max(np.abs(self.values.imag), initial=0.0))


def match_multisets(a, b) -> float:
    """Largest distance of a greedy nearest-neighbour matching between ``a`` and ``b``.

    ``a`` is visited in canonical order and each element takes the closest
    unused element of ``b``.  Sizes must agree.
    """
    a = canonical_order(a)
    b = np.asarray(b, dtype=np.complex128)
    if a.size != b.size:
        raise ValueError(f"multiset sizes differ: {a.size} vs {b.size}")
    used = np.zeros(b.size, dtype=bool)
    worst = 0.0
    for x in a:
        dist = np.where(used, np.inf, np.abs(b - x))
        k = int(np.argmin(dist))
        used[k] = True
        worst = max(worst, float(dist[k]))
    return worst


# ---------------------------------------------------------------------------
# Hermitian route: Sturm counts, bisection, inverse iteration
# ---------------------------------------------------------------------------


def _hermitian_parts(t: TridiagMatrix, tol: float = 1e-10):
    """Real diagonal and squared off-diagonal moduli; raises if not Hermitian."""
    if t.cyclic:
        raise ContractError("cyclic matrices are not tridiagonal")
    diag = np.asarray(t.diag)
    up = np.asarray(t.upper)
    low = np.asarray(t.lower)
    if np.any(np.abs(diag.imag) > tol * (1.0 + np.abs(diag.real))):
        raise ContractError("diagonal is not real")
    if np.any(np.abs(up - np.conj(low)) > tol * (np.abs(up) + np.abs(low))):
        raise ContractError("matrix is not symmetric: upper != conj(lower)")
    return diag.real.copy(), (up * low).real.copy()


def _row_scale(diag, e2) -> float:
    off = np.sqrt(np.abs(e2))
    rows = np.abs(diag).copy()
    if off.size:
        rows[:-1] += off
        rows[1:] += off
    return float(rows.max())


def _sturm_counts(diag, e2, x, pivmin) -> np.ndarray:
    """Number of negative LDL^t pivots of ``T - x I`` for each shift in ``x``."""
    x = np.asarray(x, dtype=np.float64)
    count = np.zeros(x.shape, dtype=np.int64)
    d = np.ones(x.shape)
    for j in range(diag.size):
        if j == 0:
            d = diag[0] - x
        else:
            d = diag[j] - x - e2[j - 1] / d
        # a zero pivot is nudged positive: counts eigenvalues strictly below x
        d = np.where(np.abs(d) < pivmin, pivmin, d)
        count += d < 0
    return count


def sturm_count(t: TridiagMatrix, x: float) -> int:
    """Number of eigenvalues of a symmetric tridiagonal matrix strictly less than ``x``.

    >>> from qherm.lattice import TridiagMatrix
    >>> sturm_count(TridiagMatrix(1, [5.0], [], []), 6.0)
    1
    """
    diag, e2 = _hermitian_parts(t)
    pivmin = EPS * max(_row_scale(diag, e2), np.finfo(np.float64).tiny)
    return int(_sturm_counts(diag, e2, float(x), pivmin))


def _bisect_all(diag, e2, tol):
    n = diag.size
    scale = _row_scale(diag, e2)
    off = np.sqrt(np.abs(e2))
    radius = np.zeros(n)
    if n > 1:
        radius[:-1] += off
        radius[1:] += off
    floor = np.finfo(np.float64).tiny
    pivmin = EPS * max(scale, floor)
    margin = 2.0 * n * EPS * scale + 4 * pivmin
    lo = np.full(n, float(np.min(diag - radius)) - margin)
    hi = np.full(n, float(np.max(diag + radius)) + margin)
    # k-th interval holds the k-th smallest eigenvalue: count(lo) < k <= count(hi)
    k = np.arange(1, n + 1)
    target = tol * max(scale, floor)
    for _ in range(200):
        if float(np.max(hi - lo)) <= target:
            break
        mid = 0.5 * (lo + hi)
        c = _sturm_counts(diag, e2, mid, pivmin)
        upper = c >= k
        hi = np.where(upper, mid, hi)
        lo = np.where(upper, lo, mid)
    return 0.5 * (lo + hi), scale


def symmetric_eigenvalues(t: TridiagMatrix, tol: float = 1e-14) -> Spectrum:
    """All eigenvalues of a Hermitian tridiagonal matrix by Sturm bisection.

    Every eigenvalue is bracketed inside the Gershgorin interval and bisected
    until the bracket is narrower than ``tol * scale`` with ``scale`` the
    largest absolute row sum.  Repeated eigenvalues come out repeated.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    diag, e2 = _hermitian_parts(t)
    values, _ = _bisect_all(diag, e2, tol)
    return Spectrum(np.sort(values).astype(np.complex128), True, 0.0)


def _normalize_phase(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    big = np.abs(v) > 1e-12 * np.max(np.abs(v))
    first = v[np.flatnonzero(big)[0]]
    return v * (abs(first) / first)


def _inverse_iteration(t: TridiagMatrix, e: complex, against=(), max_iter=MAX_INVERSE_ITERATIONS):
    """Inverse iteration on ``t - eI``; ``against`` vectors are projected out."""
    n = t.n
    if n == 1:
        return np.ones(1, dtype=np.complex128)
    scale = t.scale()
    ab = np.zeros((3, n), dtype=np.complex128)
    ab[0, 1:] = t.upper
    ab[1, :] = np.asarray(t.diag) - e
    ab[2, :-1] = t.lower
    # deterministic start vector with all components nonzero
    v = (1.0 + 0.5 * np.cos(np.arange(n) * 1.3)).astype(np.complex128)
    shift = 0.0
    target = 1e-8 * scale
    for it in range(max_iter):
        for u in against:
            v = v - np.vdot(u, v) * u
        v = v / np.linalg.norm(v)
        try:
            w = solve_banded((1, 1), ab, v, check_finite=False)
        except LinAlgError:
            shift = (shift or EPS * scale) * 2.0
            ab[1, :] = np.asarray(t.diag) - (e + shift)
            continue
        if not np.all(np.isfinite(w)):
            shift = (shift or EPS * scale) * 2.0
            ab[1, :] = np.asarray(t.diag) - (e + shift)
            continue
        for u in against:
            w = w - np.vdot(u, w) * u
        v = w / np.linalg.norm(w)
        # a second pass sharpens the direction even when the residual is already small
        if it >= 1 and np.linalg.norm(t.matvec(v) - e * v) <= target:
            return _normalize_phase(v)
    raise ConvergenceError(
        f"inverse iteration did not converge for eigenvalue {e!r}",
        residuals=[float(np.linalg.norm(t.matvec(v) - e * v))],
    )


def symmetric_eigenvector(t: TridiagMatrix, e: float, against=()) -> np.ndarray:
    """Unit eigenvector of a Hermitian tridiagonal matrix near eigenvalue ``e``.

    The first non-negligible component is made real positive.  Vectors in
    ``against`` (orthonormal) are projected out at every step, which keeps
    eigenvectors of clustered eigenvalues orthogonal.

    Raises
    ------
    ConvergenceError
        Residual above ``1e-8 * scale`` after 50 iterations.
    """
    _hermitian_parts(t)
    return _inverse_iteration(t, complex(e), against)


def eigenvector(m: TridiagMatrix, e: complex) -> np.ndarray:
    """Right eigenvector of a general (non-cyclic) tridiagonal matrix near ``e``."""
    if m.cyclic:
        raise ContractError("cyclic matrices are not supported by inverse iteration")
    return _inverse_iteration(m, complex(e))


# ---------------------------------------------------------------------------
# General route: Aberth-Ehrlich iteration on det(zI - H)
# ---------------------------------------------------------------------------


def general_eigenvalues(
    m: TridiagMatrix,
    tol: float = 1e-12,
    reality_tol: float = DEFAULT_REALITY_TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> Spectrum:
    """Roots of ``det(zI - H)`` by simultaneous Aberth-Ehrlich iteration.

    The starting points are equispaced on a circle of radius 1.2 times the
    Gershgorin radius of the balanced (diagonally similar) matrix, see
    :meth:`TridiagMatrix.balanced_gershgorin_radius`.  Each sweep updates all unconverged
    roots at once from the previous iterate, so the result depends only on
    the input.  A root is frozen once its correction drops below
    ``2 eps max(|z|, radius)``.

    Raises
    ------
    ConvergenceError
        Some root is still moving after ``max_sweeps`` sweeps with
        ``|p(z)| > tol * (1 + radius)**n``, or has ``|p(z)| > tol * scale**n``; the relative residuals are attached.
    """
    n = m.n
    radius = m.balanced_gershgorin_radius()
    if radius == 0.0:
        radius = 1.0
    r0 = 1.2 * radius
    angles = 2.0 * np.pi * np.arange(n) / n + 0.4
    z = r0 * np.exp(1j * angles)
    active = np.ones(n, dtype=bool)
    floor = 2.0 * EPS * radius
    for _ in range(max_sweeps):
        if not active.any():
            break
        p, dp, _ = char_poly_with_derivative(m, z[active])
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = p / dp
            diff = z[active][:, None] - z[None, :]
            inv = 1.0 / diff
            own = np.flatnonzero(active)
            inv[np.arange(own.size), own] = 0.0
            s = inv.sum(axis=1)
            w = newton / (1.0 - newton * s)
        exact = p == 0
        w = np.where(exact, 0.0, w)
        bad = ~np.isfinite(w)
        if np.any(bad):
            # coincident iterates or vanishing derivative: small deterministic kick
            w = np.where(bad, -floor * 1e3 * np.exp(1j * angles[active]), w)
        idx = np.flatnonzero(active)
        z[idx] = z[idx] - w
        done = exact | (np.abs(w) <= 2.0 * EPS * np.maximum(np.abs(z[idx]), radius))
        active[idx[done]] = False
    res = root_residual(m, z)
    # roots of a near-multiple cluster may keep jittering at the rounding level;
    # only those still far from a root (on the balanced scale) count as failures
    lost = active & (char_poly_log10_abs(m, z) - n * np.log10(1.0 + radius) > np.log10(tol))
    if lost.any():
        raise ConvergenceError(
            f"Aberth iteration did not settle {int(lost.sum())} of {n} roots "
            f"in {max_sweeps} sweeps",
            residuals=res.tolist(),
        )
    if not np.all(res <= tol):
        raise ConvergenceError(
            f"Aberth iteration left residual {float(np.max(res)):.3g} > {tol:.3g}",
            residuals=res.tolist(),
        )
    return Spectrum.from_values(z, reality_tol)


# ---------------------------------------------------------------------------
# Full diagonalization of a quasi-Hermitian chain
# ---------------------------------------------------------------------------


def diagonalize(m: TridiagMatrix, q: MetricDiagonal, tol: float = 1e-14) -> list[EigenPair]:
    """Eigenpairs of a quasi-Hermitian chain through its symmetrized form.

    ``d`` vectors come from inverse iteration on ``Q^-1 H Q`` and are
    orthonormal; ``c = Q d`` are eigenvectors of ``H`` orthonormal under the
    ``Q^-2`` metric.
    """
    t = symmetrize(m, q)
    spec = symmetric_eigenvalues(t, tol)
    values = spec.values.real
    scale = max(t.scale(), 1.0)
    pairs = []
    cluster = []
    for i, e in enumerate(values):
        if i == 0 or values[i] - values[i - 1] > CLUSTER_GAP * scale:
            cluster = []
        d = symmetric_eigenvector(t, e, against=cluster)
        cluster.append(d)
        pairs.append(EigenPair(e, d, transform_eigvec(q, d)))
    return pairs
