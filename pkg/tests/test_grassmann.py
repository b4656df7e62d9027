import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from stiefel_log.grassmann import (
    SingularOverlap,
    check_horizontal,
    grassmann_exp,
    grassmann_log,
    same_subspace,
)
from stiefel_log.matfunc import spectral_norm
from stiefel_log.stiefel import random_stiefel, stiefel_exp


def horizontal(U, rng, angles):
    T = rng.standard_normal(U.shape)
    T -= U @ (U.T @ T)
    Qh, _, Dt = np.linalg.svd(T, full_matrices=False)
    return (Qh * np.asarray(angles)) @ Dt


def test_exp_plane_in_r3():
    U = np.eye(3)[:, :2]
    t = 0.6
    D = np.zeros((3, 2))
    D[2, 0] = t
    expected = np.array([[math.cos(t), 0], [0, 1], [math.sin(t), 0]])
    np.testing.assert_allclose(grassmann_exp(U, D), expected, atol=1e-15)


def test_exp_rejects_vertical():
    U = np.eye(3)[:, :2]
    with pytest.raises(ValueError):
        grassmann_exp(U, U @ np.array([[0.0, 1.0], [-1.0, 0.0]]))


def test_check_horizontal_accepts(rng):
    U = random_stiefel(6, 2, rng)
    check_horizontal(U, horizontal(U, rng, [0.3, 0.1]))


def test_log_singular_values_are_principal_angles(rng):
    U = random_stiefel(12, 3, rng)
    U1 = random_stiefel(12, 3, rng)
    D = grassmann_log(U, U1)
    angles = np.sort(scipy.linalg.subspace_angles(U, U1))[::-1]
    np.testing.assert_allclose(np.linalg.svd(D, compute_uv=False), angles, atol=1e-12)
    np.testing.assert_allclose(U.T @ D, 0, atol=1e-13)


def test_log_independent_of_target_basis(rng):
    U = random_stiefel(10, 3, rng)
    U1 = random_stiefel(10, 3, rng)
    R, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    np.testing.assert_allclose(grassmann_log(U, U1 @ R), grassmann_log(U, U1), atol=1e-12)


def test_log_covariant_in_base_representative(rng):
    U = random_stiefel(10, 3, rng)
    U1 = random_stiefel(10, 3, rng)
    R, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    np.testing.assert_allclose(grassmann_log(U @ R, U1), grassmann_log(U, U1) @ R, atol=1e-12)


def test_log_same_subspace_is_zero(rng):
    U = random_stiefel(8, 2, rng)
    R, _ = np.linalg.qr(rng.standard_normal((2, 2)))
    np.testing.assert_allclose(grassmann_log(U, U @ R), 0, atol=1e-14)


def test_log_singular_overlap():
    U = np.eye(4)[:, :2]
    U1 = np.eye(4)[:, [0, 2]]
    with pytest.raises(SingularOverlap):
        grassmann_log(U, U1)


def test_same_subspace():
    U = np.eye(4)[:, :2]
    assert same_subspace(U, U[:, ::-1])
    assert not same_subspace(U, np.eye(4)[:, 1:3])


def test_stiefel_agreement_for_horizontal(rng):
    U = random_stiefel(15, 4, rng)
    D = horizontal(U, rng, [1.2, 0.8, 0.5, 0.1])
    assert spectral_norm(stiefel_exp(U, D) - grassmann_exp(U, D)) < 1e-13


@settings(max_examples=50, deadline=None)
@given(
    p=st.integers(min_value=1, max_value=5),
    extra=st.integers(min_value=1, max_value=10),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_roundtrip(p, extra, seed):
    n = 2 * p + extra
    rng = np.random.default_rng(seed)
    U = random_stiefel(n, p, rng)
    D = horizontal(U, rng, np.sort(rng.uniform(0, 0.99 * math.pi / 2, p))[::-1])
    U1 = grassmann_exp(U, D)
    assert spectral_norm(grassmann_log(U, U1) - D) < 1e-11
