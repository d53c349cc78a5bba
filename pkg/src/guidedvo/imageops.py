"""Bilinear sampling, resizing, and pixel normalization helpers."""

from __future__ import annotations

import numpy as np

__all__ = ["bilinear_sample", "resize_bilinear", "normalize_frame"]


def bilinear_sample(image: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample ``image`` (H, W, C) at float coordinates, clamping at borders.

    ``xs`` indexes columns and ``ys`` rows; integer coordinates reproduce
    the stored pixel values exactly.
    """
    h, w = image.shape[:2]
    img = image.astype(np.float64)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, w - 1)
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = np.clip(xs, 0, w - 1) - x0
    fy = np.clip(ys, 0, h - 1) - y0
    fx = fx[..., None]
    fy = fy[..., None]
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def resize_bilinear(image: np.ndarray, out_hw: tuple[int, int]) -> np.ndarray:
    """Resize (H, W, C) with corner-aligned bilinear interpolation."""
    oh, ow = out_hw
    h, w = image.shape[:2]
    ys = np.linspace(0.0, h - 1.0, oh) if oh > 1 else np.zeros(1)
    xs = np.linspace(0.0, w - 1.0, ow) if ow > 1 else np.zeros(1)
    grid_x, grid_y = np.meshgrid(xs, ys)
    out = bilinear_sample(image, grid_x, grid_y)
    if image.dtype == np.uint8:
        return np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return out.astype(image.dtype)


def normalize_frame(frame: np.ndarray, dtype=np.float32) -> np.ndarray:
    """8-bit (H, W, 3) image -> (3, H, W) floats in [-0.5, 0.5]."""
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) RGB frame, got {frame.shape}")
    chw = frame.astype(dtype).transpose(2, 0, 1)
    return chw / dtype(255.0) - dtype(0.5)
