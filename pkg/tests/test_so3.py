import math

import numpy as np
import pytest
from scipy import linalg
from scipy.spatial.transform import Rotation

from riccati_nav.exceptions import DegenerateInputError, NormalizationError
from riccati_nav.so3 import (
    E1,
    E2,
    E3,
    IDENTITY3,
    exp_so3,
    is_rotation,
    project_to_rotation,
    projector,
    rotation_angle_error,
    skew,
)


def _random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def test_skew_basis_identity():
    np.testing.assert_allclose(skew(E1) @ E2, E3)


def test_skew_annihilates_own_vector(rng):
    for _ in range(20):
        v = rng.normal(size=3)
        np.testing.assert_allclose(skew(v) @ v, np.zeros(3), atol=1e-15)


def test_skew_antisymmetric():
    M = skew([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(M + M.T, np.zeros((3, 3)))


def test_skew_matches_cross_product(rng):
    v, w = rng.normal(size=(2, 3))
    np.testing.assert_allclose(skew(v) @ w, np.cross(v, w))
    np.testing.assert_allclose(skew(v) @ w, -skew(w) @ v)


def test_skew_rejects_wrong_shape():
    with pytest.raises(ValueError):
        skew([1.0, 2.0])


def test_projector_collinear_and_orthogonal():
    Pi = projector(E3)
    np.testing.assert_allclose(Pi @ E3, np.zeros(3))
    np.testing.assert_allclose(Pi @ E1, E1)


def test_projector_spectrum(rng):
    for _ in range(100):
        x = _random_unit(rng)
        Pi = projector(x)
        np.testing.assert_allclose(Pi, Pi.T)
        np.testing.assert_allclose(Pi @ Pi, Pi, atol=1e-14)
        np.testing.assert_allclose(np.linalg.eigvalsh(Pi), [0.0, 1.0, 1.0], atol=1e-12)


def test_projector_keeps_skew(rng):
    x = _random_unit(rng)
    np.testing.assert_allclose(projector(x) @ skew(x), skew(x), atol=1e-14)


def test_projector_rejects_non_unit():
    with pytest.raises(NormalizationError):
        projector([1.0, 1.0, 0.0])


def test_exp_zero_is_identity():
    np.testing.assert_array_equal(exp_so3(np.zeros(3), 0.3), IDENTITY3)


def test_exp_quarter_turn():
    R = exp_so3([0.0, 0.0, math.pi / 2.0], 1.0)
    np.testing.assert_allclose(R @ E1, E2, atol=1e-15)


def test_exp_initial_attitude_of_eight():
    R = exp_so3(math.pi * E2 / 2.0, 1.0)
    expected = Rotation.from_rotvec(math.pi / 2.0 * E2).as_matrix()
    np.testing.assert_allclose(R, expected, atol=1e-15)
    np.testing.assert_allclose(R @ E3, E1, atol=1e-15)


@pytest.mark.parametrize("scale", [1e-10, 1e-6, 0.3, 2.0, 3.1])
def test_exp_matches_matrix_exponential(rng, scale):
    w = scale * _random_unit(rng)
    np.testing.assert_allclose(exp_so3(w, 1.0), linalg.expm(skew(w)), atol=1e-14)
    assert is_rotation(exp_so3(w, 1.0))


def test_exp_composition_along_axis(rng):
    w = rng.normal(size=3)
    np.testing.assert_allclose(
        exp_so3(w, 0.4) @ exp_so3(w, 0.7), exp_so3(w, 1.1), atol=1e-10
    )


def test_exp_rejects_negative_step():
    with pytest.raises(ValueError):
        exp_so3(E1, -1.0)


def test_project_is_idempotent_on_rotations(rng):
    R = Rotation.random(random_state=7).as_matrix()
    np.testing.assert_allclose(project_to_rotation(R), R, atol=1e-14)
    P = project_to_rotation(R + 0.1 * rng.normal(size=(3, 3)))
    np.testing.assert_allclose(project_to_rotation(P), P, atol=1e-14)


def test_project_removes_scaling():
    np.testing.assert_allclose(project_to_rotation(2.0 * IDENTITY3), IDENTITY3)


def test_project_matches_polar_factor(rng):
    R = Rotation.random(random_state=3).as_matrix()
    M = R + 1e-3 * rng.normal(size=(3, 3))
    U, _ = linalg.polar(M)
    P = project_to_rotation(M)
    np.testing.assert_allclose(P, U, atol=1e-12)
    assert is_rotation(P)


@pytest.mark.parametrize(
    "M",
    [
        np.zeros((3, 3)),
        np.diag([1.0, 1.0, 0.0]),
        np.diag([1.0, 1.0, -1.0]),
    ],
)
def test_project_rejects_degenerate(M):
    with pytest.raises(DegenerateInputError):
        project_to_rotation(M)


def test_angle_error_of_equal_rotations():
    R = Rotation.random(random_state=11).as_matrix()
    assert rotation_angle_error(R, R) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("theta", [1e-7, 0.1, 1.0, 2.5, 3.1])
def test_angle_error_about_axis(theta):
    assert rotation_angle_error(IDENTITY3, exp_so3([0.0, 0.0, theta])) == pytest.approx(
        theta, rel=1e-12
    )


def test_angle_error_matches_quaternion_distance():
    for seed in range(10):
        rotations = Rotation.random(2, random_state=seed)
        r1, r2 = rotations[0], rotations[1]
        expected = (r1.inv() * r2).magnitude()
        R1, R2 = r1.as_matrix(), r2.as_matrix()
        assert rotation_angle_error(R1, R2) == pytest.approx(expected, abs=1e-12)
        assert rotation_angle_error(R2, R1) == pytest.approx(expected, abs=1e-12)
