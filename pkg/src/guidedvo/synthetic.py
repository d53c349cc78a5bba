"""Synthetic planar-world sequences with exact ground-truth poses.

A single random smooth texture plays the role of the world. The camera
looks straight down at it, moving in the plane: per step it turns by a
random yaw and advances along its body x axis. Each frame is the bilinear
crop of the texture under the camera pose, so the stored poses are exact
by construction; world units equal texture pixels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import SequenceSample
from .geometry import SE3, Pose, accumulate
from .imageops import bilinear_sample, resize_bilinear
from .params import make_rng

__all__ = ["SyntheticWorldConfig", "make_texture", "render_view", "generate_synthetic"]


class ConfigError(ValueError):
    """Synthetic-world configuration that cannot produce valid data."""


@dataclass(frozen=True)
class SyntheticWorldConfig:
    """World texture, camera, and motion ranges for one dataset."""

    texture_size: int = 256
    image_size: int = 64
    n_sequences: int = 8
    seq_len: int = 7
    max_step_yaw: float = 0.05
    step_translation: tuple[float, float] = (0.5, 1.0)
    start_jitter: float = 2.0
    texture_cell: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.image_size % 64:
            raise ConfigError(f"image_size must be divisible by 64, got {self.image_size}")
        if self.seq_len < 2 or self.n_sequences < 1:
            raise ConfigError("need seq_len >= 2 and n_sequences >= 1")
        lo, hi = self.step_translation
        if not (0.0 <= lo <= hi):
            raise ConfigError(f"bad step_translation range {self.step_translation}")
        if self.max_step_yaw < 0:
            raise ConfigError("max_step_yaw must be non-negative")
        # Worst case the camera can wander from the texture center; the +1
        # keeps the bilinear footprint inside the texture as well.
        half_view = self.image_size * np.sqrt(2.0) / 2.0
        reach = self.start_jitter + (self.seq_len - 1) * hi + half_view + 1.0
        if reach > self.texture_size / 2.0:
            raise ConfigError(
                f"motion range reaches {reach:.1f} px from center but the texture "
                f"only allows {self.texture_size / 2.0:.1f}"
            )


def make_texture(size: int, cell: int, rng: np.random.Generator) -> np.ndarray:
    """Random RGB texture, smooth at the scale of ``cell`` pixels."""
    coarse = rng.integers(0, 256, size=(size // cell + 1, size // cell + 1, 3)).astype(np.uint8)
    return resize_bilinear(coarse, (size, size))


def render_view(texture: np.ndarray, pose: SE3, image_size: int) -> np.ndarray:
    """Top-down crop of the texture under a planar camera pose.

    Image pixel (row v, col u) samples the texture at
    ``R(yaw) @ (u - S/2, v - S/2) + position + texture_center``, so integer
    axis-aligned motion shifts frames by whole pixels exactly.
    """
    yaw = np.arctan2(pose.rotation[1, 0], pose.rotation[0, 0])
    cy, sy = np.cos(yaw), np.sin(yaw)
    half = image_size // 2
    center = texture.shape[0] // 2
    us, vs = np.meshgrid(np.arange(image_size) - half, np.arange(image_size) - half)
    xs = cy * us - sy * vs + pose.translation[0] + center
    ys = sy * us + cy * vs + pose.translation[1] + center
    samples = bilinear_sample(texture, xs, ys)
    return np.clip(np.rint(samples), 0, 255).astype(np.uint8)


def generate_synthetic(cfg: SyntheticWorldConfig) -> list[SequenceSample]:
    """Deterministic dataset of sequences over one shared texture."""
    rng = make_rng(cfg.seed)
    texture = make_texture(cfg.texture_size, cfg.texture_cell, rng)
    lo, hi = cfg.step_translation
    samples = []
    for _ in range(cfg.n_sequences):
        start = SE3(
            np.eye(3),
            np.array([
                rng.uniform(-cfg.start_jitter, cfg.start_jitter),
                rng.uniform(-cfg.start_jitter, cfg.start_jitter),
                0.0,
            ]),
        )
        relatives = []
        for _ in range(cfg.seq_len - 1):
            dyaw = rng.uniform(-cfg.max_step_yaw, cfg.max_step_yaw) if cfg.max_step_yaw else 0.0
            step = rng.uniform(lo, hi) if hi > lo else hi
            relatives.append(Pose(np.array([0.0, 0.0, dyaw]), np.array([step, 0.0, 0.0])))
        poses = accumulate(relatives, start)
        frames = [render_view(texture, p, cfg.image_size) for p in poses]
        samples.append(SequenceSample(frames, poses))
    return samples
