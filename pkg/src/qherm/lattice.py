"""Chain data model, tridiagonal matrix construction and characteristic polynomial.

A chain of ``n`` sites is described by the hoppings ``alpha`` (site j to
j+1, super-diagonal), ``beta`` (site j+1 to j, sub-diagonal) and the site
energies ``omega``.  Cyclic chains additionally carry the two corner entries
``H[1,N]`` (``corner_up``) and ``H[N,1]`` (``corner_down``).

Documentation uses 1-based site labels; arrays are 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import SpecificationError

# rescaling threshold of the determinant recurrence, and its decimal exponent
_BIG = 1e150
_BIG_EXP = 150


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str

    def __str__(self):
        return f"{self.field}: {self.rule}"


@dataclass(frozen=True)
class ChainSpec:
    """Coefficients of a finite tridiagonal chain.

    Nothing is validated here; see :func:`validate_spec`.
    """

    n: int
    alpha: Sequence[complex]
    beta: Sequence[complex]
    omega: Sequence[complex]
    cyclic: bool = False
    corner_up: Optional[complex] = None
    corner_down: Optional[complex] = None

    def __post_init__(self):
        for name in ("alpha", "beta", "omega"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        for name in ("corner_up", "corner_down"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, complex(val))

    def __eq__(self, other):
        if not isinstance(other, ChainSpec):
            return NotImplemented
        return (
            self.n == other.n
            and self.cyclic == other.cyclic
            and self.corner_up == other.corner_up
            and self.corner_down == other.corner_down
            and np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.beta, other.beta)
            and np.array_equal(self.omega, other.omega)
        )

    __hash__ = None


@dataclass(frozen=True)
class TridiagMatrix:
    """Banded storage of a (possibly cyclic) tridiagonal matrix.

    ``upper[j]`` sits at (j, j+1), ``lower[j]`` at (j+1, j), and the optional
    corners at (0, n-1) and (n-1, 0).
    """

    n: int
    diag: np.ndarray
    upper: np.ndarray
    lower: np.ndarray
    corner_up: Optional[complex] = None
    corner_down: Optional[complex] = None

    def __post_init__(self):
        for name in ("diag", "upper", "lower"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.diag.size != self.n or self.upper.size != max(self.n - 1, 0) \
                or self.lower.size != max(self.n - 1, 0):
            raise SpecificationError([Violation("n", "band lengths do not match n")])
        if (self.corner_up is None) != (self.corner_down is None):
            raise SpecificationError([Violation("corners", "both or neither corner required")])
        for name in ("corner_up", "corner_down"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, complex(val))

    @property
    def cyclic(self) -> bool:
        return self.corner_up is not None

    def to_dense(self) -> np.ndarray:
        h = np.diag(np.asarray(self.diag)).astype(np.complex128)
        if self.n > 1:
            idx = np.arange(self.n - 1)
            h[idx, idx + 1] = self.upper
            h[idx + 1, idx] = self.lower
        if self.cyclic:
            h[0, self.n - 1] += self.corner_up
            h[self.n - 1, 0] += self.corner_down
        return h

    def matvec(self, v) -> np.ndarray:
        """``H @ v`` without forming the dense matrix."""
        v = np.asarray(v, dtype=np.complex128)
        out = np.asarray(self.diag) * v
        if self.n > 1:
            out[:-1] += np.asarray(self.upper) * v[1:]
            out[1:] += np.asarray(self.lower) * v[:-1]
        if self.cyclic:
            out[0] += self.corner_up * v[-1]
            out[-1] += self.corner_down * v[0]
        return out

    def max_abs_entry(self) -> float:
        parts = [np.abs(self.diag), np.abs(self.upper), np.abs(self.lower)]
        if self.cyclic:
            parts.append(np.abs([self.corner_up, self.corner_down]))
        return float(max((p.max() for p in parts if p.size), default=0.0))

    def scale(self) -> float:
        """``1 + max|entry|``, the reference magnitude for residual tolerances."""
        return 1.0 + self.max_abs_entry()

    def gershgorin_radius(self) -> float:
        """Radius of a disc about the origin containing every eigenvalue."""
        rows = np.abs(np.asarray(self.diag)).copy()
        if self.n > 1:
            rows[:-1] += np.abs(self.upper)
            rows[1:] += np.abs(self.lower)
        if self.cyclic:
            rows[0] += abs(self.corner_up)
            rows[-1] += abs(self.corner_down)
        return float(rows.max())

    def balanced_gershgorin_radius(self) -> float:
        """Gershgorin radius of the diagonally similar matrix whose off-diagonal
        pairs both have modulus ``sqrt|upper_j lower_j|``.

        The spectrum is unchanged by the similarity, and the bound does not
        grow with the imbalance ``|upper_j / lower_j|``.  Falls back to
        :meth:`gershgorin_radius` for cyclic chains with a vanishing hopping.
        """
        up, low = np.abs(self.upper), np.abs(self.lower)
        if self.cyclic and not (np.all(up > 0) and np.all(low > 0)):
            return self.gershgorin_radius()
        hop = np.sqrt(up * low)
        rows = np.abs(np.asarray(self.diag)).copy()
        if self.n > 1:
            rows[:-1] += hop
            rows[1:] += hop
        if self.cyclic:
            # D_{j+1}/D_j = sqrt|lower_j/upper_j| moves the imbalance onto the corners
            log_g = 0.5 * float(np.sum(np.log(low) - np.log(up)))
            with np.errstate(over="ignore"):
                rows[0] += abs(self.corner_up) * math.exp(min(log_g, 700.0))
                rows[-1] += abs(self.corner_down) * math.exp(min(-log_g, 700.0))
        return float(rows.max())


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue with its eigenvector in the symmetrized (d) and original (c) bases."""

    value: complex
    vector_d: np.ndarray
    vector_c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))
        object.__setattr__(self, "vector_d", _frozen(self.vector_d))
        object.__setattr__(self, "vector_c", _frozen(self.vector_c))


def validate_spec(spec: ChainSpec) -> list[Violation]:
    """Return every invariant violated by ``spec``; empty when well formed."""
    out = []
    n = spec.n
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        return [Violation("n", f"must be a positive integer, got {n!r}")]
    if len(spec.omega) != n:
        out.append(Violation("omega", f"length {len(spec.omega)} != n = {n}"))
    for name in ("alpha", "beta"):
        length = len(getattr(spec, name))
        if length != n - 1:
            out.append(Violation(name, f"length {length} != n - 1 = {n - 1}"))
    for name in ("alpha", "beta", "omega"):
        if not np.all(np.isfinite(getattr(spec, name))):
            out.append(Violation(name, "entries must be finite"))
    if spec.cyclic:
        if n < 3:
            out.append(Violation("cyclic", f"cyclic chains need n >= 3, got {n}"))
        for name in ("corner_up", "corner_down"):
            if getattr(spec, name) is None:
                out.append(Violation(name, "required when cyclic"))
    else:
        for name in ("corner_up", "corner_down"):
            if getattr(spec, name) is not None:
                out.append(Violation(name, "must be absent when not cyclic"))
    return out


def build_chain(spec: ChainSpec) -> TridiagMatrix:
    """Build the tridiagonal matrix of a chain, copying coefficients verbatim."""
    violations = validate_spec(spec)
    if violations:
        raise SpecificationError(violations)
    return TridiagMatrix(
        n=int(spec.n),
        diag=spec.omega,
        upper=spec.alpha,
        lower=spec.beta,
        corner_up=spec.corner_up if spec.cyclic else None,
        corner_down=spec.corner_down if spec.cyclic else None,
    )


def _recurrence(diag, prods, z):
    """Scaled determinant recurrence and its z-derivative.

    Returns ``(p, dp, e)`` such that ``det(zI - T) = p * 10**e`` and its
    derivative is ``dp * 10**e``; ``z`` may be an array.
    """
    z = np.asarray(z, dtype=np.complex128)
    p2 = np.zeros_like(z)
    p1 = np.ones_like(z)
    d2 = np.zeros_like(z)
    d1 = np.zeros_like(z)
    e = np.zeros(z.shape, dtype=np.int64)
    for j in range(len(diag)):
        x = z - diag[j]
        s = prods[j - 1] if j > 0 else 0.0
        p0 = x * p1 - s * p2
        d0 = p1 + x * d1 - s * d2
        p2, p1, d2, d1 = p1, p0, d1, d0
        big = np.maximum(np.abs(p1), np.abs(d1)) > _BIG
        if np.any(big):
            for arr in (p2, p1, d2, d1):
                arr[big] /= _BIG
            e[big] += _BIG_EXP
    return p1, d1, e


def _scaled_product(values):
    """Product of a sequence as ``(mantissa, decimal exponent)``."""
    m, e = 1.0 + 0j, 0
    for v in values:
        m *= v
        if abs(m) > _BIG:
            m /= _BIG
            e += _BIG_EXP
        elif 0 < abs(m) < 1.0 / _BIG:
            m *= _BIG
            e -= _BIG_EXP
    return m, e


def _shift(m, e, target):
    """Re-express ``m * 10**e`` with exponent ``target >= e``."""
    with np.errstate(under="ignore"):
        return m * np.power(10.0, (e - target).astype(np.float64))


def char_poly_with_derivative(m: TridiagMatrix, z):
    """``det(zI - H)`` and its derivative in scaled form.

    Returns ``(p, dp, e)``: the polynomial is ``p * 10**e`` and its derivative
    ``dp * 10**e``.  Works elementwise on array ``z``.
    """
    z = np.asarray(z, dtype=np.complex128)
    shape = z.shape
    p, dp, e = _char_poly_flat(m, z.reshape(-1))
    return p.reshape(shape), dp.reshape(shape), e.reshape(shape)


def _char_poly_flat(m: TridiagMatrix, z: np.ndarray):
    prods = np.asarray(m.upper) * np.asarray(m.lower)
    p, dp, e = _recurrence(m.diag, prods, z)
    if not m.cyclic:
        return p, dp, e
    # bordered expansion: det = P(1..n) - u*l*P(2..n-1) - (l*prod(alpha) + u*prod(beta))
    u, low = m.corner_up, m.corner_down
    pm, dpm, em = _recurrence(m.diag[1:-1], prods[1:-1], z)
    ma, ea = _scaled_product(m.upper)
    mb, eb = _scaled_product(m.lower)
    ea_arr = np.full(z.shape, ea, dtype=np.int64)
    eb_arr = np.full(z.shape, eb, dtype=np.int64)
    target = np.maximum.reduce([e, em, ea_arr, eb_arr])
    p_out = (_shift(p, e, target) - u * low * _shift(pm, em, target)
             - low * _shift(np.full(z.shape, ma), ea_arr, target)
             - u * _shift(np.full(z.shape, mb), eb_arr, target))
    dp_out = _shift(dp, e, target) - u * low * _shift(dpm, em, target)
    return p_out, dp_out, target


def char_poly_scaled(m: TridiagMatrix, z) -> tuple[complex, int]:
    """``det(zI - H)`` as ``(mantissa, decimal exponent)``; never overflows."""
    p, _, e = char_poly_with_derivative(m, np.complex128(z))
    return complex(p), int(e)


def _collapse(mant: complex, exp: int) -> complex:
    with np.errstate(over="ignore", under="ignore"):
        factor = np.float64(10.0) ** np.float64(exp)
        re = 0.0 if mant.real == 0 else float(mant.real * factor)
        im = 0.0 if mant.imag == 0 else float(mant.imag * factor)
    return complex(re, im)


def char_poly_eval(m: TridiagMatrix, z: complex) -> complex:
    """Evaluate ``det(zI - H)``.

    The recurrence is ``p_0 = 1``, ``p_1 = z - H[1,1]`` and
    ``p_j = (z - H[j,j]) p_{j-1} - H[j,j-1] H[j-1,j] p_{j-2}``; cyclic chains
    add the two corner terms of the bordered expansion.  Components that are
    not representable in double precision come back as ``inf``; use
    :func:`char_poly_scaled` for the exact scaled form.

    Examples
    --------
    >>> m = build_chain(ChainSpec(2, [1], [4], [0, 0]))
    >>> char_poly_eval(m, 2)
    0j
    """
    return _collapse(*char_poly_scaled(m, z))


def char_poly_log10_abs(m: TridiagMatrix, z) -> np.ndarray:
    """``log10 |det(zI - H)|`` elementwise, without overflow."""
    p, _, e = char_poly_with_derivative(m, z)
    with np.errstate(divide="ignore"):
        return np.log10(np.abs(p)) + e


def root_residual(m: TridiagMatrix, z) -> np.ndarray:
    """``|det(zI - H)| / scale**n`` with ``scale = 1 + max|entry|``."""
    lg = char_poly_log10_abs(m, z) - m.n * np.log10(m.scale())
    with np.errstate(under="ignore"):
        return np.power(10.0, lg)
