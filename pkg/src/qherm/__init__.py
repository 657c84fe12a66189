"""Quasi-Hermitian tridiagonal chains: metric construction, symmetrization and spectra."""

from .analytic import (
    UniformChainParams,
    YuceParams,
    symmetry_pairing_check,
    two_by_two_spectrum,
    uniform_chain_solution,
    yuce_critical_v0,
    yuce_spectrum,
)
from .eigensolver import (
    Spectrum,
    diagonalize,
    general_eigenvalues,
    sturm_count,
    symmetric_eigenvalues,
    symmetric_eigenvector,
)
from .lattice import ChainSpec, EigenPair, TridiagMatrix, build_chain, char_poly_eval, validate_spec
from .symmetrizer import (
    MetricDiagonal,
    QuasiHermReport,
    compute_metric,
    metric_inner_product,
    quasi_herm_check,
    symmetrize,
    transform_eigvec,
    verify_intertwining,
)

__version__ = "0.1.0"
