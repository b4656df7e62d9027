"""Explicit St(4, 2) pair at distance pi/2 whose natural completion has eigenvalue -1."""

import numpy as np

__all__ = ["critical_case"]


def critical_case():
    """Data of the St(4, 2) counterexample.

    Returns a dict with the base point ``U``, the unit tangent ``Delta``, the
    endpoint ``U1`` of the geodesic at ``t = pi/2``, the basis ``Q`` of the
    normal component, and two completions: ``V0_degenerate`` (a permutation
    with eigenvalue -1) and ``V0_flipped`` (its first row negated, a rotation
    by pi/2).
    """
    U = 0.5 * np.array([[1, 1, 1, 1], [1, 1, -1, -1]], dtype=float).T
    Delta = 0.5 * np.array([[-1, 1, -1, 1], [0, 0, 0, 0]], dtype=float).T
    U1 = 0.5 * np.array([[-1, 1, -1, 1], [1, 1, -1, -1]], dtype=float).T
    # first column spans the normal component; second completes R^4
    Q = 0.5 * np.array([[-1, 1, -1, 1], [1, -1, -1, 1]], dtype=float).T
    V0 = np.array(
        [
            [0, 0, 1, 0],
            [0, 1, 0, 0],
            [1, 0, 0, 0],
            [0, 0, 0, 1],
        ],
        dtype=float,
    )
    V0_flipped = V0.copy()
    V0_flipped[0] *= -1
    return {
        "U": U,
        "Delta": Delta,
        "t": np.pi / 2,
        "U1": U1,
        "Q": Q,
        "V0_degenerate": V0,
        "V0_flipped": V0_flipped,
    }
