"""Dense matrix functions for skew-symmetric and orthogonal matrices.

Matrices are plain ``numpy.ndarray`` objects of dtype ``float64`` (C order).
Both the exponential and the logarithm exploit normality: a skew-symmetric
matrix is unitarily diagonalizable with spectrum on the imaginary axis, an
orthogonal matrix with spectrum on the unit circle.  The functions are applied
on the spectrum and mapped back, so skew input gives orthogonal output and vice
versa up to roundoff.
"""

import numpy as np
import scipy.linalg

__all__ = [
    "EigenvalueNearMinusOne",
    "MatrixFunctionError",
    "expm_skew",
    "is_orthogonal",
    "is_skew",
    "logm_orthogonal",
    "qr_economy",
    "skew",
    "spectral_norm",
    "svd",
]

SKEW_TOL = 1e-12
ORTHO_TOL = 1e-10
IMAG_TOL = 1e-12
DEFAULT_ANGLE_GUARD = 1e-8


class MatrixFunctionError(ArithmeticError):
    """A matrix function could not be evaluated reliably."""


class EigenvalueNearMinusOne(MatrixFunctionError):
    """The principal logarithm is undefined: an eigenvalue sits at (or near) -1."""

    def __init__(self, max_angle, angle_guard):
        self.max_angle = float(max_angle)
        self.angle_guard = float(angle_guard)
        super().__init__(
            f"eigenvalue angle {self.max_angle:.17g} exceeds pi - {self.angle_guard:g}; "
            "principal matrix logarithm is undefined"
        )


def _as_matrix(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def _as_square(A, name="A"):
    A = _as_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    return A


def skew(B):
    """Skew-symmetric part ``(B - B^T) / 2``."""
    B = np.asarray(B, dtype=float)
    return 0.5 * (B - B.T)


def is_skew(S, tol=SKEW_TOL):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(S), initial=0.0)))
    return float(np.max(np.abs(S + S.T), initial=0.0)) <= tol * scale


def is_orthogonal(V, tol=ORTHO_TOL):
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        return False
    return spectral_norm(V.T @ V - np.eye(V.shape[0])) <= tol


def qr_economy(A):
    """Economy-size QR decomposition with a nonnegative diagonal in ``R``.

    Parameters
    ----------
    A : (n, p) array_like
        Input with ``n >= p``. Rank deficiency is allowed.

    Returns
    -------
    Q : (n, p) ndarray
        Orthonormal columns.
    R : (p, p) ndarray
        Upper triangular with ``R[i, i] >= 0``.
    """
    A = _as_matrix(A)
    n, p = A.shape
    if n < p:
        raise ValueError(f"qr_economy needs n >= p, got shape {A.shape}")
    Q, R = np.linalg.qr(A, mode="reduced")
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    Q = Q * signs
    R = signs[:, None] * R
    # -0.0 on the diagonal would make outputs differ bytewise between runs
    R[np.diag_indices(p)] = np.abs(np.diag(R))
    return Q, R


def svd(A):
    """Thin SVD ``A = D @ diag(S) @ R.T`` with ``S`` nonincreasing.

    Returns ``(D, S, R)`` where ``S`` is a 1-D array of singular values.
    """
    A = _as_matrix(A)
    D, S, Rt = np.linalg.svd(A, full_matrices=False)
    return D, S, Rt.T


def spectral_norm(A):
    """Operator 2-norm (largest singular value)."""
    A = _as_matrix(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def expm_skew(C):
    """Matrix exponential of a real skew-symmetric matrix.

    ``1j * C`` is Hermitian, so ``eigh`` yields a unitary eigenbasis ``W`` and
    real ``lam`` with ``C = W diag(-1j * lam) W^H``.  The result
    ``W diag(exp(-1j * lam)) W^H`` is real orthogonal.
    """
    C = _as_square(C, "C")
    if not is_skew(C):
        raise ValueError("expm_skew requires a skew-symmetric matrix")
    p = C.shape[0]
    if p == 0:
        return np.eye(0)
    C = skew(C)
    lam, W = np.linalg.eigh(1j * C)
    E = (W * np.exp(-1j * lam)) @ W.conj().T
    _check_imag(E, 1.0)
    return np.ascontiguousarray(E.real)


def logm_orthogonal(V, angle_guard=DEFAULT_ANGLE_GUARD, return_norm=False):
    """Principal logarithm of a real orthogonal matrix.

    Computed from the complex Schur form ``V = Z T Z^H``; for a normal matrix
    ``T`` is diagonal up to roundoff, so ``log(V) = Z diag(1j * phi) Z^H`` with
    ``phi = angle(diag(T))``.

    Parameters
    ----------
    V : (m, m) array_like
        Orthogonal matrix.
    angle_guard : float
        Eigenvalue angles must satisfy ``|phi| <= pi - angle_guard``.
    return_norm : bool
        Also return ``max |phi|``, which equals the spectral norm of the
        logarithm.

    Raises
    ------
    EigenvalueNearMinusOne
        If some eigenvalue angle is within ``angle_guard`` of ``pi``.
    """
    V = _as_square(V, "V")
    m = V.shape[0]
    if not is_orthogonal(V):
        raise ValueError("logm_orthogonal requires an orthogonal matrix")
    if m == 0:
        L = np.zeros((0, 0))
        return (L, 0.0) if return_norm else L
    T, Z = scipy.linalg.schur(V.astype(complex), output="complex")
    phi = np.angle(np.diag(T))
    max_angle = float(np.max(np.abs(phi)))
    if max_angle > np.pi - angle_guard:
        raise EigenvalueNearMinusOne(max_angle, angle_guard)
    L = (Z * (1j * phi)) @ Z.conj().T
    _check_imag(L, max(1.0, max_angle))
    L = skew(L.real)
    if return_norm:
        return L, max_angle
    return L


def _check_imag(X, scale):
    residue = float(np.max(np.abs(X.imag), initial=0.0))
    if residue >= IMAG_TOL * scale:
        raise MatrixFunctionError(
            f"imaginary residue {residue:.3g} too large when mapping back to a real matrix"
        )
