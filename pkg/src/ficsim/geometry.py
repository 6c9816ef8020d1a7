"""Quaternion and pose helpers (scalar-first wxyz convention)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(q))
    if n < 1e-12:
        return IDENTITY_QUAT.copy()
    q = q / n
    # fix the double-cover sign so equal rotations compare equal
    if q[0] < 0.0:
        q = -q
    return q


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    half = 0.5 * angle
    s = math.sin(half)
    return np.array([math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_from_rotvec(r: np.ndarray) -> np.ndarray:
    angle = float(np.linalg.norm(r))
    if angle < 1e-12:
        return np.array([1.0, 0.5 * r[0], 0.5 * r[1], 0.5 * r[2]]) / math.sqrt(
            1.0 + 0.25 * float(np.dot(r, r)))
    return quat_from_axis_angle(r / angle, angle)


def quat_to_rotvec(q: np.ndarray) -> np.ndarray:
    """Rotation vector with angle in (-pi, pi]."""
    q = quat_normalize(q)
    w = min(1.0, max(-1.0, float(q[0])))
    angle = 2.0 * math.acos(w)
    s = math.sqrt(max(0.0, 1.0 - w * w))
    if s < 1e-12:
        return np.array([2.0 * q[1], 2.0 * q[2], 2.0 * q[3]])
    return (q[1:] / s) * angle


@dataclass
class Pose:
    """Task-space pose: position plus unit quaternion (renormalized on set)."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.orientation = quat_normalize(np.asarray(self.orientation, dtype=float).reshape(4))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.zeros(3), IDENTITY_QUAT.copy())

    def copy(self) -> "Pose":
        return Pose(self.position.copy(), self.orientation.copy())

    def as_vector(self) -> np.ndarray:
        """Position stacked with the rotation vector (6,)."""
        return np.concatenate([self.position, quat_to_rotvec(self.orientation)])

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "Pose":
        v = np.asarray(v, dtype=float).reshape(6)
        return cls(v[:3], quat_from_rotvec(v[3:]))


def pose_error(desired: Pose, actual: Pose) -> np.ndarray:
    """6-vector error: position difference and rotation vector of R_d R^T.

    The angular part is the axis-angle of the world-frame rotation taking
    the actual orientation to the desired one; its magnitude is <= pi.
    """
    dq = quat_multiply(desired.orientation, quat_conjugate(actual.orientation))
    return np.concatenate([desired.position - actual.position, quat_to_rotvec(dq)])


def integrate_quat(q: np.ndarray, omega_world: np.ndarray, dt: float) -> np.ndarray:
    """Advance orientation by a world-frame angular velocity over dt."""
    return quat_normalize(quat_multiply(quat_from_rotvec(omega_world * dt), q))
