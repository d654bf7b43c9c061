"""Sensing matrices that satisfy the RIP with respect to an arbitrary dictionary.

Any dictionary ``D`` (``l x n``) and random matrix ``A`` of equal rank can be
factored as ``D = G A H`` with ``G`` invertible and ``H`` orthonormal. The
sensing matrix ``S = E G^{-1}`` then gives ``S D = E A H``, a row subset of a
rotated random matrix, so standard sparse recovery applies.
"""

from .cosamp import RecoveryProblem, RecoveryResult, recovery_success
from .dictionary import WaveletSpec, wavelet_dictionary
from .ensembles import Ensemble, EnsembleSpec, RowSelector, SparseVector, random_matrix, row_selector, sparse_vector
from .errors import (
    DimensionError,
    FormatError,
    NotTightFrameError,
    NumericalError,
    ParameterError,
    RankMismatchError,
    RipSenseError,
    SingularMatrixError,
)
from .factorize import Factorization, Method, ValidationReport, sensing_matrix, validate

__version__ = "0.1.0"

__all__ = [
    "DimensionError",
    "Ensemble",
    "EnsembleSpec",
    "Factorization",
    "FormatError",
    "Method",
    "NotTightFrameError",
    "NumericalError",
    "ParameterError",
    "RankMismatchError",
    "RecoveryProblem",
    "RecoveryResult",
    "RipSenseError",
    "RowSelector",
    "SingularMatrixError",
    "SparseVector",
    "ValidationReport",
    "WaveletSpec",
    "random_matrix",
    "recovery_success",
    "row_selector",
    "sensing_matrix",
    "sparse_vector",
    "validate",
    "wavelet_dictionary",
]
