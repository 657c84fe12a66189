"""Quasi-Hermiticity test and diagonal similarity transform of tridiagonal chains.

With ``H = Q T Q^-1`` for a real diagonal ``Q``, the ratios

    R_j = conj(H[j+1, j]) / H[j, j+1] = |Q_{j+1} / Q_j|**2

must be strictly positive.  A real diagonal plus positive ratios makes ``T``
Hermitian; for cyclic chains the corners must also obey
``conj(H[N,1]) = R_{N-1} ... R_1 H[1,N]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DecouplingError, MetricRangeError, NotSymmetrizableError
from .lattice import TridiagMatrix

DEFAULT_TOL = 1e-12
# |log10 Q_j| beyond which the metric is kept in log form
_LOG10_LIMIT = 300.0
_LN_MAX = math.log(np.finfo(np.float64).max)


@dataclass(frozen=True)
class MetricDiagonal:
    """Diagonal entries ``Q_j`` of the similarity transform.

    When ``log_scaled`` is true, ``q`` holds ``ln|Q_j|`` and every entry has
    the sign of ``q1``.
    """

    q: np.ndarray
    ratios: np.ndarray
    q1: float
    log_scaled: bool = False

    def __post_init__(self):
        for name in ("q", "ratios"):
            arr = np.array(getattr(self, name), dtype=np.float64).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.q.size

    @property
    def sign(self) -> float:
        return math.copysign(1.0, self.q1)

    def log_abs(self) -> np.ndarray:
        """``ln|Q_j|`` regardless of storage form."""
        if self.log_scaled:
            return self.q
        return np.log(np.abs(self.q))

    def values(self) -> np.ndarray:
        """Plain ``Q_j`` values; raises :class:`MetricRangeError` on overflow."""
        if not self.log_scaled:
            return self.q
        bad = np.flatnonzero(self.q > _LN_MAX)
        if bad.size:
            raise MetricRangeError(int(bad[0]) + 1, float(self.q[bad[0]]))
        return self.sign * np.exp(self.q)


@dataclass(frozen=True)
class QuasiHermReport:
    is_quasi_hermitian: bool
    diag_real: bool
    ratios_positive: bool
    cyclic_ok: Optional[bool] = None
    first_violation: Optional[tuple] = None
    ratios: Optional[np.ndarray] = None


def hopping_ratios(m: TridiagMatrix) -> np.ndarray:
    """``R_j = conj(H[j+1,j]) / H[j,j+1]``; ``nan`` where ``H[j,j+1] = 0``."""
    up = np.asarray(m.upper)
    low = np.asarray(m.lower)
    out = np.full(up.shape, np.nan + 0j)
    nz = up != 0
    out[nz] = np.conj(low[nz]) / up[nz]
    return out


def quasi_herm_check(m: TridiagMatrix, tol: float = DEFAULT_TOL) -> QuasiHermReport:
    """Decide whether ``m`` is similar to a Hermitian matrix via a diagonal metric.

    Parameters
    ----------
    m : TridiagMatrix
    tol : float
        Relative tolerance for the reality of diagonal entries and ratios,
        and for the cyclic corner condition.

    Returns
    -------
    QuasiHermReport
        ``first_violation`` is ``(index, rule, value)`` with a 1-based index.
    """
    violation = None
    diag = np.asarray(m.diag)
    bad_diag = np.flatnonzero(np.abs(diag.imag) > tol * (1.0 + np.abs(diag)))
    diag_real = bad_diag.size == 0
    if not diag_real:
        j = int(bad_diag[0])
        violation = (j + 1, "diagonal not real", complex(diag[j]))

    ratios = hopping_ratios(m)
    ratios_positive = True
    for j, r in enumerate(ratios):
        if np.isnan(r):
            rule = "zero hopping H[j,j+1]"
        elif abs(r.imag) > tol or not r.real > tol:
            rule = "ratio not real positive"
        else:
            continue
        ratios_positive = False
        if violation is None:
            violation = (j + 1, rule, complex(r))
        break

    cyclic_ok = None
    if m.cyclic:
        if ratios_positive:
            prod = complex(np.prod(ratios.real))
            lhs = np.conj(m.corner_down)
            cyclic_ok = bool(abs(lhs - prod * m.corner_up) <= tol * (1.0 + abs(m.corner_down)))
        else:
            cyclic_ok = False
        if not cyclic_ok and violation is None:
            violation = (m.n, "cyclic corner condition", complex(m.corner_down))

    ok = diag_real and ratios_positive and (cyclic_ok if m.cyclic else True)
    return QuasiHermReport(
        is_quasi_hermitian=bool(ok),
        diag_real=bool(diag_real),
        ratios_positive=bool(ratios_positive),
        cyclic_ok=cyclic_ok,
        first_violation=violation,
        ratios=ratios,
    )


def _positive_ratios(m: TridiagMatrix, tol: float) -> np.ndarray:
    ratios = hopping_ratios(m)
    for j, r in enumerate(ratios):
        if np.isnan(r):
            raise DecouplingError(j + 1)
        if abs(r.imag) > tol or not r.real > tol:
            raise NotSymmetrizableError(j + 1, complex(r))
    return ratios.real.copy()


def compute_metric(m: TridiagMatrix, q1: float = 1.0, tol: float = DEFAULT_TOL) -> MetricDiagonal:
    """Build ``Q_j = q1 * sqrt(R_1 ... R_{j-1})``.

    Only the off-diagonal ratios are required to be positive, so chains with
    a complex diagonal still get a metric.  The result switches to log form
    when any ``|Q_j|`` leaves ``[1e-300, 1e300]``.

    Raises
    ------
    DecouplingError
        Some ``H[j,j+1]`` is zero.
    NotSymmetrizableError
        Some ratio is not real positive.
    """
    q1 = float(q1)
    if q1 == 0.0 or not math.isfinite(q1):
        raise ValueError(f"q1 must be finite and nonzero, got {q1!r}")
    ratios = _positive_ratios(m, tol)
    log_q = math.log(abs(q1)) + np.concatenate(([0.0], np.cumsum(0.5 * np.log(ratios))))
    if np.any(np.abs(log_q) > _LOG10_LIMIT * math.log(10.0)):
        return MetricDiagonal(q=log_q, ratios=ratios, q1=q1, log_scaled=True)
    q = q1 * np.concatenate(([1.0], np.cumprod(np.sqrt(ratios))))
    return MetricDiagonal(q=q, ratios=ratios, q1=q1)


def uniform_q1(alpha: float, beta: float) -> float:
    """The ``q1 = sqrt(beta/alpha)`` choice giving ``Q_j = (beta/alpha)**(j/2)``."""
    return math.sqrt(beta / alpha)


def symmetrize(m: TridiagMatrix, q: MetricDiagonal) -> TridiagMatrix:
    """Return ``Q^-1 H Q``.

    Off-diagonals become ``sqrt(R_j) H[j,j+1]`` and ``H[j+1,j] / sqrt(R_j)``;
    the diagonal is unchanged.  The result does not depend on ``q1``.
    """
    root = np.sqrt(q.ratios)
    upper = np.asarray(m.upper) * root
    lower = np.asarray(m.lower) / root
    cu = cd = None
    if m.cyclic:
        # Q_N / Q_1 = sqrt(R_1 ... R_{N-1})
        span = math.exp(0.5 * float(np.sum(np.log(q.ratios))))
        cu = m.corner_up * span
        cd = m.corner_down / span
    return TridiagMatrix(m.n, m.diag, upper, lower, cu, cd)


def _entries(m: TridiagMatrix):
    """Row, column and value of every stored entry."""
    n = m.n
    idx = np.arange(n - 1)
    rows = [np.arange(n), idx, idx + 1]
    cols = [np.arange(n), idx + 1, idx]
    vals = [np.asarray(m.diag), np.asarray(m.upper), np.asarray(m.lower)]
    if m.cyclic:
        rows.append(np.array([0, n - 1]))
        cols.append(np.array([n - 1, 0]))
        vals.append(np.array([m.corner_up, m.corner_down]))
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def verify_intertwining(m: TridiagMatrix, q: MetricDiagonal, offdiag_only: Optional[bool] = None) -> float:
    """Relative max-norm residual of ``H Q^2 - Q^2 H^dagger``.

    Parameters
    ----------
    offdiag_only : bool, optional
        Restrict the comparison to off-diagonal entries.  Defaults to true
        exactly when the diagonal of ``m`` is not real, in which case only the
        hopping part is expected to intertwine.

    Notes
    -----
    Evaluated entrywise in log space, so log-scaled metrics are handled
    without forming ``Q^2``.
    """
    if offdiag_only is None:
        offdiag_only = bool(np.any(np.asarray(m.diag).imag != 0))
    rows, cols, vals = _entries(m)
    dense = {}
    for r, c, v in zip(rows, cols, vals):
        dense[(int(r), int(c))] = dense.get((int(r), int(c)), 0) + v
    lq = q.log_abs()
    log_lhs_max = -np.inf
    log_diff_max = -np.inf
    for (r, c), h_rc in dense.items():
        h_cr = dense.get((c, r), 0.0)
        if h_rc != 0:
            log_lhs_max = max(log_lhs_max, math.log(abs(h_rc)) + 2 * lq[c])
        if offdiag_only and r == c:
            continue
        top = max(lq[r], lq[c])
        diff = h_rc * math.exp(2 * (lq[c] - top)) - np.conj(h_cr) * math.exp(2 * (lq[r] - top))
        if diff != 0:
            log_diff_max = max(log_diff_max, math.log(abs(diff)) + 2 * top)
    if log_diff_max == -np.inf:
        return 0.0
    if log_lhs_max == -np.inf:
        return math.inf
    return math.exp(log_diff_max - log_lhs_max)


def transform_eigvec(q: MetricDiagonal, d) -> np.ndarray:
    """Map a symmetrized-basis vector to the original basis, ``c_j = Q_j d_j``.

    Raises
    ------
    MetricRangeError
        Some ``c_j`` is not representable; names the first such (1-based) index.
    """
    d = np.asarray(d, dtype=np.complex128)
    if d.size != q.n:
        raise ValueError(f"vector length {d.size} != metric size {q.n}")
    if not q.log_scaled:
        return q.q * d
    out = np.zeros_like(d)
    mag = np.abs(d)
    nz = mag > 0
    with np.errstate(divide="ignore"):
        log_c = np.where(nz, q.q + np.log(np.where(nz, mag, 1.0)), -np.inf)
    bad = np.flatnonzero(log_c > _LN_MAX)
    if bad.size:
        raise MetricRangeError(int(bad[0]) + 1, float(log_c[bad[0]]))
    with np.errstate(under="ignore"):
        out[nz] = q.sign * (d[nz] / mag[nz]) * np.exp(log_c[nz])
    return out


def metric_inner_product(q: MetricDiagonal, a, b, conjugate: bool = False) -> complex:
    """``sum_j a_j b_j / Q_j**2``; with ``conjugate`` the first argument is conjugated."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != (q.n,) or b.shape != (q.n,):
        raise ValueError("vector lengths must match the metric size")
    if conjugate:
        a = np.conj(a)
    with np.errstate(under="ignore", over="ignore"):
        inv = np.exp(-q.q) if q.log_scaled else 1.0 / q.q
        return complex(np.sum((a * inv) * (b * inv)))
