"""Stiefel manifold St(n, p) under the canonical metric.

Points are ``(n, p)`` arrays with orthonormal columns; tangent vectors at ``U``
are ``(n, p)`` arrays ``Delta`` with ``U.T @ Delta`` skew-symmetric.  Both are
plain ndarrays; the ``check_*`` helpers validate them at API boundaries.

The exponential is the closed form via a ``2p x 2p`` matrix exponential.  The
logarithm inverts it iteratively: starting from an orthogonal completion
``V0 = [[M, X0], [N, Y0]]`` it rotates the last ``p`` columns by
``expm(-C_k)`` until the lower-right block ``C_k`` of ``logm(V_k)`` vanishes.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .matfunc import (
    DEFAULT_ANGLE_GUARD,
    EigenvalueNearMinusOne,
    expm_skew,
    is_skew,
    logm_orthogonal,
    qr_economy,
    skew,
    spectral_norm,
    svd,
)

__all__ = [
    "Completion",
    "CompletionError",
    "ExpFactors",
    "LogBranchFailure",
    "LogConfig",
    "LogReport",
    "MaxIterExceeded",
    "NormKind",
    "Status",
    "StiefelLogError",
    "build_completion",
    "canonical_inner",
    "canonical_norm",
    "check_point",
    "check_tangent",
    "distance",
    "project_to_tangent",
    "random_pair",
    "random_stiefel",
    "random_tangent",
    "stiefel_exp",
    "stiefel_log",
]

POINT_TOL = 1e-10
TANGENT_TOL = 1e-10
# fixed seed for the random block used to complete (M; N) to an orthogonal matrix
_COMPLETION_SEED = 20170518


class NormKind(str, enum.Enum):
    SPECTRAL = "2"
    FROBENIUS = "fro"


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITER_EXCEEDED = "MaxIterExceeded"
    LOG_BRANCH_FAILURE = "LogBranchFailure"


class StiefelLogError(ArithmeticError):
    """Base class for logarithm failures; ``report`` holds the partial run."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class LogBranchFailure(StiefelLogError):
    """An iterate had an eigenvalue at -1, so its principal log is undefined."""


class MaxIterExceeded(StiefelLogError):
    pass


class CompletionError(ArithmeticError):
    pass


@dataclass(frozen=True)
class LogConfig:
    """Settings for :func:`stiefel_log`.

    ``tau`` is the stopping threshold on the norm of ``C_k``; ``norm_kind``
    picks the 2-norm or the Frobenius norm for that test.  ``V_k`` is
    re-orthonormalized whenever ``||V_k^T V_k - I||_2`` exceeds
    ``reorth_tol``.
    """

    tau: float = 1e-13
    max_iter: int = 1000
    norm_kind: NormKind = NormKind.SPECTRAL
    angle_guard: float = DEFAULT_ANGLE_GUARD
    reorth_tol: float = 1e-10

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        object.__setattr__(self, "norm_kind", NormKind(self.norm_kind))


@dataclass
class LogReport:
    """Convergence record of one :func:`stiefel_log` run.

    ``iterations`` counts the updates ``V_{k+1} = V_k W_k``; ``conv_hist``
    holds ``||C_k||`` for every evaluated iterate (so it has
    ``iterations + 1`` entries on convergence) and ``log_norms`` the matching
    ``||logm(V_k)||_2``.
    """

    iterations: int = 0
    conv_hist: list = field(default_factory=list)
    log_norms: list = field(default_factory=list)
    norm_logV0: float = math.nan
    status: Status = Status.CONVERGED
    reorthogonalizations: int = 0

    def csv_rows(self):
        """``(k, ||C_k||)`` pairs for plotting convergence histories."""
        return list(enumerate(self.conv_hist))


@dataclass(frozen=True)
class ExpFactors:
    A: np.ndarray
    Q_E: np.ndarray
    R_E: np.ndarray
    M: np.ndarray
    N_E: np.ndarray


@dataclass(frozen=True)
class Completion:
    """Starting data of the logarithm.

    ``Q @ N`` is the component of the target orthogonal to the base point and
    ``V0 = [[M, X0], [N, Y0]]`` is orthogonal.
    """

    M: np.ndarray
    N: np.ndarray
    X0: np.ndarray
    Y0: np.ndarray
    Q: np.ndarray

    @property
    def p(self):
        return self.M.shape[0]

    @property
    def V0(self):
        return np.block([[self.M, self.X0], [self.N, self.Y0]])

    @classmethod
    def from_V0(cls, V0, Q):
        """Wrap an explicitly given ``2p x 2p`` starting iterate."""
        V0 = np.asarray(V0, dtype=float)
        p = V0.shape[0] // 2
        if V0.shape != (2 * p, 2 * p):
            raise ValueError(f"V0 must be 2p x 2p, got {V0.shape}")
        return cls(
            M=V0[:p, :p].copy(),
            N=V0[p:, :p].copy(),
            X0=V0[:p, p:].copy(),
            Y0=V0[p:, p:].copy(),
            Q=np.asarray(Q, dtype=float),
        )


def check_point(U, tol=POINT_TOL):
    """Validate and return ``U`` as a float array on St(n, p)."""
    U = np.asarray(U, dtype=float)
    if U.ndim != 2:
        raise ValueError(f"Stiefel point must be a matrix, got shape {U.shape}")
    n, p = U.shape
    if n < p or p < 1:
        raise ValueError(f"Stiefel point needs n >= p >= 1, got shape {U.shape}")
    if not np.all(np.isfinite(U)):
        raise ValueError("Stiefel point contains non-finite entries")
    if spectral_norm(U.T @ U - np.eye(p)) > tol:
        raise ValueError("columns of U are not orthonormal")
    return U


def check_tangent(U, Delta, tol=TANGENT_TOL):
    Delta = np.asarray(Delta, dtype=float)
    if Delta.shape != U.shape:
        raise ValueError(f"tangent shape {Delta.shape} does not match point shape {U.shape}")
    if not np.all(np.isfinite(Delta)):
        raise ValueError("tangent contains non-finite entries")
    A = U.T @ Delta
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    if float(np.max(np.abs(A + A.T), initial=0.0)) > tol * scale:
        raise ValueError("Delta is not tangent: U^T Delta is not skew-symmetric")
    return Delta


def project_to_tangent(U, X):
    """Project an ambient ``(n, p)`` matrix onto the tangent space at ``U``."""
    U = check_point(U)
    X = np.asarray(X, dtype=float)
    if X.shape != U.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {U.shape}")
    UtX = U.T @ X
    return U @ skew(UtX) + (X - U @ UtX)


def canonical_inner(U, D1, D2):
    """Canonical metric ``tr(D1^T (I - U U^T / 2) D2)``."""
    U = check_point(U)
    D1 = check_tangent(U, D1)
    D2 = check_tangent(U, D2)
    return float(np.sum(D1 * D2) - 0.5 * np.sum((U.T @ D1) * (U.T @ D2)))


def canonical_norm(U, Delta):
    return math.sqrt(max(canonical_inner(U, Delta, Delta), 0.0))


def _normal_basis(U, K):
    """Orthonormal ``Q`` with ``U^T Q = 0`` (where possible) and ``Q @ N = K``.

    ``K`` must already be orthogonal to ``span(U)``.  A plain QR of ``K`` leaves
    the columns belonging to a rank deficiency of ``K`` arbitrary, possibly
    inside ``span(U)``; factoring ``[U, K]`` instead keeps every column of
    ``Q`` orthogonal to ``U``.
    """
    n, p = U.shape
    if n >= 2 * p:
        Qf, Rf = qr_economy(np.hstack([U, K]))
        return Qf[:, p:].copy(), Rf[p:, p:].copy()
    # n < 2p: the normal space has dimension n - p < p.  Pad Q with columns of
    # U and give them zero rows in N; the Procrustes completion then decouples
    # those coordinates so they never enter the result.
    Qf, _ = np.linalg.qr(U, mode="complete")
    U_perp = Qf[:, p:]
    Q = np.hstack([U_perp, U[:, : 2 * p - n]])
    N = np.vstack([U_perp.T @ K, np.zeros((2 * p - n, p))])
    return Q, N


def stiefel_exp(U, Delta, return_factors=False):
    """Riemannian exponential ``Exp_U(Delta)`` under the canonical metric.

    Splits ``Delta = U A + Q_E R_E`` and evaluates
    ``(M; N_E) = expm([[A, -R_E^T], [R_E, 0]]) (I; 0)``; the result is
    ``U M + Q_E N_E``.

    With ``return_factors=True`` also returns the :class:`ExpFactors`.
    """
    U = check_point(U)
    Delta = check_tangent(U, Delta)
    p = U.shape[1]
    A = skew(U.T @ Delta)
    K = Delta - U @ (U.T @ Delta)
    Q_E, R_E = _normal_basis(U, K)
    T = np.block([[A, -R_E.T], [R_E, np.zeros((p, p))]])
    MN = expm_skew(T)[:, :p]
    M, N_E = MN[:p], MN[p:]
    U1 = U @ M + Q_E @ N_E
    if return_factors:
        return U1, ExpFactors(A=A, Q_E=Q_E, R_E=R_E, M=M, N_E=N_E)
    return U1


def _procrustes(X0, Y0):
    # Y0 = D S R^T; rotating the completion by R D^T makes Y0 = D S D^T.
    D, S, R = svd(Y0)
    rot = R @ D.T
    return X0 @ rot, (D * S) @ D.T


def build_completion(U, U1):
    """Orthogonal completion with Procrustes correction.

    Returns a :class:`Completion` with ``M = U^T U1``, ``Q N`` the normal
    component of ``U1`` and ``(X0; Y0)`` completing ``(M; N)`` to an orthogonal
    matrix, rotated so that ``Y0`` is symmetric positive semidefinite.
    """
    U = check_point(U)
    U1 = check_point(U1)
    if U.shape != U1.shape:
        raise ValueError(f"shape mismatch: {U.shape} vs {U1.shape}")
    p = U.shape[1]
    M = U.T @ U1
    Q, N = _normal_basis(U, U1 - U @ M)
    W = np.vstack([M, N])

    rng = np.random.default_rng(_COMPLETION_SEED)
    for _ in range(2):
        G = rng.random((2 * p, p))
        Qc, _ = np.linalg.qr(np.hstack([W, G]), mode="reduced")
        XY = Qc[:, p:]
        V0 = np.hstack([W, XY])
        if spectral_norm(V0.T @ V0 - np.eye(2 * p)) <= POINT_TOL:
            break
    else:
        raise CompletionError("could not complete (M; N) to an orthogonal matrix")

    X0, Y0 = _procrustes(XY[:p], XY[p:])
    return Completion(M=M, N=N, X0=X0, Y0=Y0, Q=Q)


def _norm(C, kind):
    if kind is NormKind.FROBENIUS:
        return float(np.linalg.norm(C, "fro"))
    return spectral_norm(C)


def stiefel_log(U, U1, cfg=None, completion=None):
    """Riemannian logarithm ``Log_U(U1)`` by fixed-point iteration.

    Parameters
    ----------
    U, U1 : (n, p) ndarray
        Base point and target on St(n, p).
    cfg : LogConfig, optional
    completion : Completion, optional
        Starting data; defaults to :func:`build_completion`.

    Returns
    -------
    Delta : (n, p) ndarray
        Tangent vector at ``U`` with ``stiefel_exp(U, Delta) == U1``.
    report : LogReport

    Raises
    ------
    LogBranchFailure
        An iterate has an eigenvalue (near) -1.
    MaxIterExceeded
        ``cfg.max_iter`` updates did not reach ``cfg.tau``.
    """
    cfg = LogConfig() if cfg is None else cfg
    U = check_point(U)
    U1 = check_point(U1)
    if completion is None:
        completion = build_completion(U, U1)
    p = U.shape[1]
    Q = completion.Q
    V = completion.V0
    eye = np.eye(2 * p)
    report = LogReport()

    k = 0
    while True:
        if spectral_norm(V.T @ V - eye) > cfg.reorth_tol:
            Qv, Rv = qr_economy(V)
            V = Qv
            report.reorthogonalizations += 1
        try:
            L, log_norm = logm_orthogonal(V, cfg.angle_guard, return_norm=True)
        except EigenvalueNearMinusOne as exc:
            if k == 0:
                report.norm_logV0 = math.pi
            report.status = Status.LOG_BRANCH_FAILURE
            raise LogBranchFailure(f"iterate {k}: {exc}", report) from exc
        if k == 0:
            report.norm_logV0 = log_norm
        C = L[p:, p:]
        normC = _norm(C, cfg.norm_kind)
        report.conv_hist.append(normC)
        report.log_norms.append(log_norm)
        if normC <= cfg.tau:
            break
        if k >= cfg.max_iter:
            report.status = Status.MAX_ITER_EXCEEDED
            raise MaxIterExceeded(
                f"no convergence after {cfg.max_iter} iterations (||C|| = {normC:.3g})", report
            )
        V[:, p:] = V[:, p:] @ expm_skew(-C)
        k += 1
        report.iterations = k

    Delta = U @ L[:p, :p] + Q @ L[p:, :p]
    return Delta, report


def distance(U, U1, cfg=None):
    """Riemannian distance, the canonical norm of ``Log_U(U1)``."""
    Delta, _ = stiefel_log(U, U1, cfg)
    return canonical_norm(U, Delta)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_stiefel(n, p, seed=None):
    """Orthonormal factor of a QR of an ``(n, p)`` matrix with uniform(0, 1) entries."""
    if n < p or p < 1:
        raise ValueError(f"need n >= p >= 1, got n={n}, p={p}")
    rng = _rng(seed)
    U, _ = np.linalg.qr(rng.random((n, p)), mode="reduced")
    return U


def random_tangent(U, dist, seed=None):
    """Random tangent at ``U`` of canonical norm ``dist``.

    ``Delta = U A + (I - U U^T) T`` with ``A = B - B^T``; ``B`` and ``T`` have
    uniform(0, 1) entries.
    """
    U = check_point(U)
    if not dist > 0:
        raise ValueError("dist must be positive")
    n, p = U.shape
    rng = _rng(seed)
    B = rng.random((p, p))
    A = B - B.T
    T = rng.random((n, p))
    Delta = U @ A + T - U @ (U.T @ T)
    norm = math.sqrt(np.sum(Delta * Delta) - 0.5 * np.sum(A * A))
    return (dist / norm) * Delta


def random_pair(n, p, dist, seed=None):
    """Random ``(U, U1, Delta)`` with ``U1 = stiefel_exp(U, Delta)``, ``||Delta||_U = dist``."""
    rng = _rng(seed)
    U = random_stiefel(n, p, rng)
    Delta = random_tangent(U, dist, rng)
    return U, stiefel_exp(U, Delta), Delta
