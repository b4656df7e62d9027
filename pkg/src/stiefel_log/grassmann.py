"""Closed-form exponential and logarithm on the Grassmann manifold Gr(n, p).

A subspace is represented by any orthonormal basis ``U`` (a Stiefel point);
tangent vectors are horizontal, ``U^T Delta = 0``.
"""

import numpy as np

from .matfunc import spectral_norm, svd
from .stiefel import check_point

__all__ = [
    "SingularOverlap",
    "check_horizontal",
    "grassmann_exp",
    "grassmann_log",
    "same_subspace",
]

HORIZONTAL_TOL = 1e-10
SUBSPACE_TOL = 1e-10
SINGULAR_TOL = 1e-12


class SingularOverlap(ArithmeticError):
    """``U^T U1`` is singular: some principal angle is pi/2 (cut locus)."""


def check_horizontal(U, Delta, tol=HORIZONTAL_TOL):
    Delta = np.asarray(Delta, dtype=float)
    if Delta.shape != U.shape:
        raise ValueError(f"tangent shape {Delta.shape} does not match point shape {U.shape}")
    scale = max(1.0, spectral_norm(Delta))
    if spectral_norm(U.T @ Delta) > tol * scale:
        raise ValueError("Delta is not horizontal: U^T Delta != 0")
    return Delta


def same_subspace(U1, U2, tol=SUBSPACE_TOL):
    """True if ``U1`` and ``U2`` span the same subspace (projector distance <= tol)."""
    U1 = np.asarray(U1, dtype=float)
    U2 = np.asarray(U2, dtype=float)
    return spectral_norm(U1 @ U1.T - U2 @ U2.T) <= tol


def grassmann_exp(U, Delta):
    """Exp via the thin SVD ``Delta = Qh S D^T``: ``U D cos(S) D^T + Qh sin(S) D^T``."""
    U = check_point(U)
    Delta = check_horizontal(U, Delta)
    Qh, S, D = svd(Delta)
    return (U @ D) * np.cos(S) @ D.T + Qh * np.sin(S) @ D.T


def grassmann_log(U, U1):
    """Log via the SVD ``Qh S D^T = (I - U U^T) U1 (U^T U1)^{-1}``; returns ``Qh arctan(S) D^T``.

    Raises
    ------
    SingularOverlap
        If the smallest singular value of ``U^T U1`` is below 1e-12.
    """
    U = check_point(U)
    U1 = check_point(U1)
    if U.shape != U1.shape:
        raise ValueError(f"shape mismatch: {U.shape} vs {U1.shape}")
    M = U.T @ U1
    Dm, Sm, Rm = svd(M)
    if Sm[-1] < SINGULAR_TOL:
        raise SingularOverlap(f"smallest singular value of U^T U1 is {Sm[-1]:.3g}")
    M_inv = (Rm / Sm) @ Dm.T
    K = (U1 - U @ M) @ M_inv
    Qh, S, D = svd(K)
    return Qh * np.arctan(S) @ D.T
