"""Rotation-group and small fixed-size linear algebra primitives."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg

from .const import SINGULAR_TOL, SMALL_ANGLE, UNIT_TOL
from .exceptions import DegenerateInputError, NormalizationError

Vec3 = NDArray[np.float64]
Mat3 = NDArray[np.float64]

IDENTITY3: Mat3 = np.eye(3)
E1: Vec3 = np.array([1.0, 0.0, 0.0])
E2: Vec3 = np.array([0.0, 1.0, 0.0])
E3: Vec3 = np.array([0.0, 0.0, 1.0])


def as_vec3(v: ArrayLike) -> Vec3:
    """Return ``v`` as a float64 array of shape (3,)."""
    out = np.asarray(v, dtype=float).reshape(-1)
    if out.shape != (3,):
        raise ValueError(f"Expected a 3-vector, got shape {out.shape}")
    return out


def skew(v: ArrayLike) -> Mat3:
    """Cross-product matrix, ``skew(v) @ w == np.cross(v, w)``."""
    x, y, z = as_vec3(v)
    return np.array(
        [
            [0.0, -z, y],
            [z, 0.0, -x],
            [-y, x, 0.0],
        ]
    )


def check_unit(x: ArrayLike, tol: float = UNIT_TOL) -> Vec3:
    """Return ``x`` if it has unit norm within ``tol``."""
    x = as_vec3(x)
    norm = float(np.linalg.norm(x))
    if abs(norm - 1.0) > tol:
        raise NormalizationError(f"Expected a unit vector, got norm {norm:.12g}")
    return x


def projector(x: ArrayLike) -> Mat3:
    """Orthogonal projector onto the plane normal to the unit vector ``x``."""
    x = check_unit(x)
    return IDENTITY3 - np.outer(x, x)


def exp_so3(w: ArrayLike, dt: float = 1.0) -> Mat3:
    """Matrix exponential of ``skew(w * dt)`` (Rodrigues' formula)."""
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    phi = as_vec3(w) * dt
    theta = float(np.linalg.norm(phi))
    K = skew(phi)
    if theta < SMALL_ANGLE:
        return IDENTITY3 + K + 0.5 * (K @ K)
    return (
        IDENTITY3
        + (math.sin(theta) / theta) * K
        + ((1.0 - math.cos(theta)) / theta**2) * (K @ K)
    )


def is_rotation(R: ArrayLike, tol: float = UNIT_TOL) -> bool:
    """True when ``R`` is orthogonal with determinant +1 within ``tol``."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return bool(
        np.max(np.abs(R.T @ R - IDENTITY3)) <= tol
        and abs(np.linalg.det(R) - 1.0) <= tol
    )


def project_to_rotation(M: ArrayLike) -> Mat3:
    """
    Nearest rotation to ``M`` in the Frobenius norm.

    This is the orthogonal factor of the polar decomposition ``M = R S``,
    computed from the singular value decomposition ``M = U diag(s) Vt`` as
    ``R = U Vt``. Only matrices with a positive determinant are accepted, so
    no reflection correction is ever needed.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3) or not np.all(np.isfinite(M)):
        raise DegenerateInputError("Expected a finite 3x3 matrix")
    U, s, Vt = linalg.svd(M)
    if s[-1] <= SINGULAR_TOL * max(s[0], 1.0):
        raise DegenerateInputError(
            f"Matrix is singular (smallest singular value {s[-1]:.3g})"
        )
    if np.linalg.det(M) <= 0.0:
        raise DegenerateInputError("Matrix has a non-positive determinant")
    return U @ Vt


def rotation_angle_error(R1: ArrayLike, R2: ArrayLike) -> float:
    """
    Geodesic angle in radians between two rotations, in ``[0, pi]``.

    Equal to ``arccos((trace(R1^T R2) - 1) / 2)``, evaluated with ``atan2``
    on the symmetric and skew parts so that nearly equal rotations keep full
    precision.
    """
    M = np.asarray(R1, dtype=float).T @ np.asarray(R2, dtype=float)
    cos_angle = np.clip((np.trace(M) - 1.0) / 2.0, -1.0, 1.0)
    axial = 0.5 * np.array([M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]])
    sin_angle = float(np.linalg.norm(axial))
    return float(math.atan2(sin_angle, cos_angle))
