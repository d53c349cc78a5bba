"""Sequence loading: KITTI-style pose files, TUM trajectories, PNG frames.

Both text loaders are total over their grammar: every malformed input
raises :class:`DataError` naming the offending file and line, never an
uncaught exception.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .geometry import SE3
from .imageops import resize_bilinear

__all__ = [
    "DataError",
    "SequenceSample",
    "load_image",
    "save_image",
    "load_kitti_poses",
    "save_kitti_poses",
    "load_kitti_sequence",
    "load_tum_trajectory",
]

# How far a parsed rotation block may deviate from orthonormal before the
# line is rejected instead of being projected back onto SO(3).
ROTATION_TOL = 1e-3
QUAT_NORM_TOL = 1e-3


class DataError(ValueError):
    """Malformed dataset input, located by file and line where possible."""


@dataclass
class SequenceSample:
    """Frames plus aligned ground-truth world poses."""

    frames: list[np.ndarray]
    poses: list[SE3]

    def __post_init__(self):
        if len(self.frames) != len(self.poses):
            raise DataError(
                f"{len(self.frames)} frames but {len(self.poses)} poses"
            )
        if len(self.frames) < 2:
            raise DataError("a sequence needs at least two frames")
        first = self.frames[0].shape
        for i, f in enumerate(self.frames):
            if f.shape != first:
                raise DataError(f"frame {i} has shape {f.shape}, expected {first}")

    def __len__(self) -> int:
        return len(self.frames)


def load_image(path) -> np.ndarray:
    """PNG -> (H, W, 3) uint8."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def save_image(frame: np.ndarray, path) -> None:
    Image.fromarray(frame, mode="RGB").save(path)


def _read_text(path) -> list[str]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 text ({exc})") from exc
    return text.splitlines()


def _orthonormalize(r: np.ndarray, path, lineno: int) -> np.ndarray:
    err = np.abs(r.T @ r - np.eye(3)).max()
    if err > ROTATION_TOL:
        raise DataError(
            f"{path}:{lineno}: rotation block deviates from orthonormal by {err:.3e}"
        )
    u, _, vt = np.linalg.svd(r)
    r = u @ vt
    if np.linalg.det(r) < 0:
        raise DataError(f"{path}:{lineno}: rotation block is a reflection")
    return r


def load_kitti_poses(path) -> list[SE3]:
    """Pose file with one row-major 3x4 [R|t] world pose per line."""
    poses = []
    for lineno, line in enumerate(_read_text(path), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 12:
            raise DataError(f"{path}:{lineno}: expected 12 values, got {len(fields)}")
        try:
            vals = np.array([float(f) for f in fields], dtype=np.float64)
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if not np.all(np.isfinite(vals)):
            raise DataError(f"{path}:{lineno}: non-finite pose entry")
        mat = vals.reshape(3, 4)
        rot = _orthonormalize(mat[:, :3], path, lineno)
        poses.append(SE3(rot, mat[:, 3]))
    if not poses:
        raise DataError(f"{path}: no poses found")
    return poses


def save_kitti_poses(poses, path) -> None:
    lines = []
    for p in poses:
        mat = np.hstack([p.rotation, p.translation.reshape(3, 1)])
        lines.append(" ".join(f"{v:.17g}" for v in mat.reshape(-1)))
    Path(path).write_text("\n".join(lines) + "\n")


def load_kitti_sequence(image_dir, pose_file, resize_to: tuple[int, int] | None = None) -> SequenceSample:
    """Frames (sorted PNGs in ``image_dir``) joined with their pose file.

    ``resize_to`` (height, width) rescales frames bilinearly when the
    source size differs.
    """
    image_dir = Path(image_dir)
    files = sorted(image_dir.glob("*.png"))
    if not files:
        raise DataError(f"{image_dir}: no PNG frames found")
    poses = load_kitti_poses(pose_file)
    if len(files) != len(poses):
        raise DataError(
            f"{image_dir}: {len(files)} frames but {pose_file} has {len(poses)} poses"
        )
    frames = []
    for f in files:
        frame = load_image(f)
        if resize_to is not None and frame.shape[:2] != tuple(resize_to):
            frame = resize_bilinear(frame, tuple(resize_to))
        frames.append(frame)
    return SequenceSample(frames, poses)


def _quaternion_to_rotation(qx, qy, qz, qw) -> np.ndarray:
    return np.array(
        [
            [1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw)],
            [2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw)],
            [2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy)],
        ]
    )


def load_tum_trajectory(path) -> list[SE3]:
    """Trajectory lines "timestamp tx ty tz qx qy qz qw"; '#' comments skipped.

    Quaternions within 1e-3 of unit norm are normalized; anything further
    off is rejected.
    """
    poses = []
    for lineno, line in enumerate(_read_text(path), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if len(fields) != 8:
            raise DataError(f"{path}:{lineno}: expected 8 fields, got {len(fields)}")
        try:
            _, tx, ty, tz, qx, qy, qz, qw = (float(f) for f in fields)
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if not all(np.isfinite(v) for v in (tx, ty, tz, qx, qy, qz, qw)):
            raise DataError(f"{path}:{lineno}: non-finite value")
        norm = float(np.sqrt(qx * qx + qy * qy + qz * qz + qw * qw))
        if abs(norm - 1.0) > QUAT_NORM_TOL:
            raise DataError(
                f"{path}:{lineno}: quaternion norm {norm:.6f} is not within "
                f"{QUAT_NORM_TOL} of 1"
            )
        qx, qy, qz, qw = qx / norm, qy / norm, qz / norm, qw / norm
        poses.append(SE3(_quaternion_to_rotation(qx, qy, qz, qw), np.array([tx, ty, tz])))
    if not poses:
        raise DataError(f"{path}: no trajectory entries found")
    return poses
