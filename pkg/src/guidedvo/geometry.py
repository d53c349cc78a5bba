"""SE(3) poses: Euler conversions, composition, trajectory accumulation.

Euler convention throughout the repo: intrinsic roll (x), pitch (y),
yaw (z), composed as ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``. Round trips
through :func:`rotation_to_euler` are exact away from ``|pitch| = pi/2``.
All functions are pure and operate on float64 numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "GeometryError",
    "Pose",
    "SE3",
    "Trajectory",
    "euler_to_rotation",
    "rotation_to_euler",
    "compose",
    "invert",
    "accumulate",
    "relatives_of",
    "rotation_angle",
]

GIMBAL_EPS = 1e-9

_EYE3 = np.eye(3)


class GeometryError(ValueError):
    """Invalid rotation or pose input."""


@dataclass
class Pose:
    """Rotation as an Euler triple (radians) plus a translation (meters)."""

    euler: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        self.euler = np.asarray(self.euler, dtype=np.float64).reshape(3)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(self.euler)) and np.all(np.isfinite(self.translation))):
            raise GeometryError("pose components must be finite")

    def to_se3(self) -> "SE3":
        return SE3(euler_to_rotation(self.euler), self.translation.copy())

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.zeros(3), np.zeros(3))


@dataclass
class SE3:
    """Rigid transform: 3x3 rotation matrix plus translation vector."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)

    def validate(self, tol: float = 1e-9) -> "SE3":
        err = np.abs(self.rotation.T @ self.rotation - _EYE3).max()
        if err > tol:
            raise GeometryError(f"rotation not orthonormal (max deviation {err:.3e})")
        if abs(np.linalg.det(self.rotation) - 1.0) > tol:
            raise GeometryError("rotation determinant is not +1")
        return self

    def to_pose(self) -> Pose:
        return Pose(rotation_to_euler(self.rotation), self.translation.copy())

    @classmethod
    def identity(cls) -> "SE3":
        return cls(np.eye(3), np.zeros(3))


# A trajectory is a non-empty list of absolute SE3 poses, index-aligned
# with the frames they describe.
Trajectory = list


def euler_to_rotation(euler) -> np.ndarray:
    roll, pitch, yaw = np.asarray(euler, dtype=np.float64).reshape(3)
    sr, cr = np.sin(roll), np.cos(roll)
    sp, cp = np.sin(pitch), np.cos(pitch)
    sy, cy = np.sin(yaw), np.cos(yaw)
    return np.array(
        [
            [cy * cp, -sy * cr + cy * sp * sr, sy * sr + cy * sp * cr],
            [sy * cp, cy * cr + sy * sp * sr, -cy * sr + sy * sp * cr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def rotation_to_euler(rotation: np.ndarray, return_degenerate: bool = False):
    """Invert :func:`euler_to_rotation`.

    In the gimbal-locked regime (``|R[2,0]|`` within 1e-9 of 1, i.e.
    ``|pitch| = pi/2``) roll and yaw are not separable; yaw is set to 0 by
    convention and the degenerate flag (second return value, when
    requested) is raised.
    """
    r = np.asarray(rotation, dtype=np.float64)
    if r.shape != (3, 3):
        raise GeometryError(f"rotation must be 3x3, got {r.shape}")
    err = np.abs(r.T @ r - _EYE3).max()
    if err > 1e-6:
        raise GeometryError(f"rotation not orthonormal (max deviation {err:.3e})")
    degenerate = abs(r[2, 0]) > 1.0 - GIMBAL_EPS
    if degenerate:
        pitch = np.arcsin(np.clip(-r[2, 0], -1.0, 1.0))
        yaw = 0.0
        if r[2, 0] < 0:  # pitch = +pi/2
            roll = np.arctan2(r[0, 1], r[1, 1])
        else:  # pitch = -pi/2
            roll = np.arctan2(-r[0, 1], r[1, 1])
    else:
        pitch = np.arcsin(np.clip(-r[2, 0], -1.0, 1.0))
        roll = np.arctan2(r[2, 1], r[2, 2])
        yaw = np.arctan2(r[1, 0], r[0, 0])
    euler = np.array([roll, pitch, yaw])
    if return_degenerate:
        return euler, degenerate
    return euler


def compose(a: SE3, b: SE3) -> SE3:
    """a then b in a's frame: ``(Ra @ Rb, Ra @ tb + ta)``."""
    return SE3(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(x: SE3) -> SE3:
    rt = x.rotation.T
    return SE3(rt, -rt @ x.translation)


def relative(a: SE3, b: SE3) -> SE3:
    """Motion from a to b expressed in a's frame: ``a^-1 b``."""
    return compose(invert(a), b)


def accumulate(relatives: Sequence[Pose], origin: SE3 | None = None) -> Trajectory:
    """Chain per-step relative motions into absolute poses.

    Returns ``len(relatives) + 1`` poses; index 0 is the origin (identity
    when omitted).
    """
    if len(relatives) == 0:
        raise GeometryError("accumulate requires at least one relative pose")
    current = origin if origin is not None else SE3.identity()
    out = [current]
    for rel in relatives:
        current = compose(current, rel.to_se3())
        out.append(current)
    return out


def relatives_of(trajectory: Trajectory) -> list[Pose]:
    """Per-step relative motions of an absolute-pose trajectory."""
    if len(trajectory) < 2:
        raise GeometryError("need at least two poses to derive relatives")
    return [relative(a, b).to_pose() for a, b in zip(trajectory[:-1], trajectory[1:])]


def rotation_angle(rotation: np.ndarray) -> float:
    """Geodesic angle of a rotation matrix, in [0, pi]."""
    r = np.asarray(rotation, dtype=np.float64)
    return float(np.arccos(np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)))
