"""Riemannian exponential and logarithm on the Stiefel manifold (canonical metric)."""

from .grassmann import SingularOverlap, grassmann_exp, grassmann_log
from .matfunc import EigenvalueNearMinusOne, expm_skew, logm_orthogonal, qr_economy, spectral_norm, svd
from .stiefel import (
    Completion,
    LogBranchFailure,
    LogConfig,
    LogReport,
    MaxIterExceeded,
    Status,
    build_completion,
    canonical_inner,
    canonical_norm,
    distance,
    project_to_tangent,
    random_pair,
    random_stiefel,
    random_tangent,
    stiefel_exp,
    stiefel_log,
)

__version__ = "0.1.0"
