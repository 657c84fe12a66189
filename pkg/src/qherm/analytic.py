"""Closed-form spectra of solvable chains.

* the general two-site chain,
* the uniform chain (``alpha_j = alpha``, ``beta_j = beta``, ``omega_j = omega``),
  whose symmetrized form is a Hückel chain with hopping ``sqrt(alpha beta)``,
* the alternating gain/loss chain ``alpha_j = 1``, ``beta_j = gamma``,
  ``omega_j = (-1)**j i V0`` with an even number of sites.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .eigensolver import Spectrum, canonical_order, match_multisets
from .lattice import ChainSpec, EigenPair


class TwoSiteSpectrum(NamedTuple):
    plus: complex
    minus: complex
    real: bool


def two_by_two_spectrum(omega1, omega2, alpha, beta, tol: float = 0.0) -> TwoSiteSpectrum:
    """Eigenvalues ``(w1 + w2 +- sqrt((w1 - w2)**2 + 4 alpha beta)) / 2``.

    ``real`` is set when the site-energy sum and the discriminant are real
    (to ``tol``) and the discriminant is ``>= -tol``.

    >>> two_by_two_spectrum(0, 2, 1, -0.75)
    TwoSiteSpectrum(plus=(1.5+0j), minus=(0.5+0j), real=True)
    """
    w1, w2, a, b = (complex(v) for v in (omega1, omega2, alpha, beta))
    disc = (w1 - w2) ** 2 + 4 * a * b
    root = cmath.sqrt(disc)
    total = w1 + w2
    real = abs(total.imag) <= tol and abs(disc.imag) <= tol and disc.real >= -tol
    return TwoSiteSpectrum((total + root) / 2, (total - root) / 2, bool(real))


@dataclass(frozen=True)
class UniformChainParams:
    n: int
    omega: float
    alpha: float
    beta: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        if not self.alpha * self.beta > 0:
            raise DomainError(f"uniform chain needs alpha*beta > 0, got {self.alpha * self.beta!r}")

    @property
    def hopping(self) -> float:
        """Hopping ``sqrt(alpha beta)`` of the symmetrized chain."""
        return math.sqrt(self.alpha * self.beta)

    def x(self, energy: float) -> float:
        """Reduced energy ``(E - omega) / sqrt(alpha beta)``."""
        return (energy - self.omega) / self.hopping

    def chain(self) -> ChainSpec:
        n = int(self.n)
        return ChainSpec(n, [self.alpha] * (n - 1), [self.beta] * (n - 1), [self.omega] * n)


def uniform_chain_values(p: UniformChainParams) -> np.ndarray:
    """``E_k = omega + 2 sqrt(alpha beta) cos(k pi / (N+1))`` for ``k = 1..N``, in k order."""
    n = int(p.n)
    k = np.arange(1, n + 1)
    # cos(k pi/(N+1)) written as a sine so the middle level is exactly omega for odd N
    cosine = np.sin((n + 1 - 2 * k) * np.pi / (2.0 * (n + 1)))
    return p.omega + 2.0 * p.hopping * cosine


def uniform_chain_pairs(p: UniformChainParams) -> list[EigenPair]:
    """Eigenpairs of the uniform chain in k order (``k = 1..N``).

    ``d_jk = sqrt(2/(N+1)) sin(k j pi / (N+1))`` and, with the metric choice
    ``Q_1 = sqrt(beta/alpha)``, ``c_jk = (beta/alpha)**(j/2) d_jk``.  For
    negative ``alpha`` and ``beta`` the ``d`` vectors carry an extra ``(-1)**j``.
    """
    n = int(p.n)
    values = uniform_chain_values(p)
    j = np.arange(1, n + 1)
    weights = (p.beta / p.alpha) ** (j / 2.0)
    # negative hoppings flip the sign of the symmetrized hopping: alternate the sine vectors
    flip = (-1.0) ** j if p.alpha < 0 else np.ones(n)
    pairs = []
    for k in range(1, n + 1):
        d = flip * math.sqrt(2.0 / (n + 1)) * np.sin(k * j * np.pi / (n + 1))
        pairs.append(EigenPair(values[k - 1], d, weights * d))
    return pairs


def uniform_chain_solution(p: UniformChainParams) -> list[EigenPair]:
    """Eigenpairs of the uniform chain sorted by eigenvalue, see :func:`uniform_chain_pairs`."""
    return sorted(uniform_chain_pairs(p), key=lambda pr: (pr.value.real, pr.value.imag))


@dataclass(frozen=True)
class YuceParams:
    """Alternating gain/loss chain: ``alpha_j = 1``, ``beta_j = gamma``, ``omega_j = (-1)**j i V0``."""

    n: int
    gamma: float
    v_big: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2 or self.n % 2:
            raise DomainError(f"n must be a positive even integer, got {self.n!r}")
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma!r}")

    @property
    def v0(self) -> float:
        """Reduced gain/loss ``V0 / sqrt(gamma)``."""
        return self.v_big / math.sqrt(self.gamma)

    def y(self, energy: complex) -> complex:
        """Reduced energy ``E / sqrt(gamma)``."""
        return energy / math.sqrt(self.gamma)

    def chain(self) -> ChainSpec:
        return yuce_chain(int(self.n), self.gamma, self.v_big)


def yuce_chain(n: int, gamma: float, v_big: float) -> ChainSpec:
    """Chain spec with site ``j`` (1-based) carrying ``(-1)**j i V0``."""
    j = np.arange(1, n + 1)
    omega = 1j * v_big * (-1.0) ** j
    return ChainSpec(n, [1.0] * (n - 1), [gamma] * (n - 1), omega)


def yuce_energies_squared(p: YuceParams) -> np.ndarray:
    """``E_k**2 = 4 gamma cos(k pi/(N+1))**2 - V0**2`` for ``k = 1..N/2``."""
    k = np.arange(1, int(p.n) // 2 + 1)
    return 4.0 * p.gamma * np.cos(k * np.pi / (p.n + 1)) ** 2 - p.v_big ** 2


def yuce_spectrum(p: YuceParams, reality_tol: float = 0.0) -> Spectrum:
    """All ``N`` eigenvalues as the pairs ``+-sqrt(E_k**2)``.

    ``all_real`` holds exactly when ``|V0|`` is strictly below the critical
    value, so the coalescence point itself counts as broken.
    """
    e2 = yuce_energies_squared(p)
    roots = np.sqrt(e2.astype(np.complex128))
    values = canonical_order(np.concatenate([roots, -roots]))
    all_real = abs(p.v_big) < yuce_critical_v0(int(p.n), p.gamma)
    return Spectrum(values, bool(all_real), reality_tol)


def yuce_critical_v0(n: int, gamma: float) -> float:
    """``2 sqrt(gamma) cos(N pi / (2 (N+1)))``: spectrum is real for ``|V0|`` below it."""
    YuceParams(n, gamma, 0.0)
    return 2.0 * math.sqrt(gamma) * math.cos(n * math.pi / (2.0 * (n + 1)))


def symmetry_pairing_check(s, omega: complex = 0.0, tol: float = 1e-8) -> bool:
    """Whether ``{E - omega}`` is invariant under negation within ``tol``.

    Greedy nearest-neighbour matching of the shifted values against their
    negatives, visited in canonical order.
    """
    values = s.values if isinstance(s, Spectrum) else np.asarray(s, dtype=np.complex128)
    eps = np.asarray(values, dtype=np.complex128) - omega
    if eps.size == 0:
        return True
    return match_multisets(eps, -eps) <= tol
