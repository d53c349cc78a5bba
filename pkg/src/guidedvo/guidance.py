"""Context-aware feature selection driven by the previous branch output.

Three mechanisms rescale the current feature map X using the branch's
previous output O as guidance:

* squeeze-excitation style: channel scales from a GAP + two-FC bottleneck
  over O alone, so the reweighting depends only on what the branch already
  produced;
* point-wise correlation: one scale per spatial position, the sigmoid of
  the cosine similarity between the channel columns of X and O there;
* channel-wise correlation: one scale per channel, the sigmoid of the
  cosine similarity between the flattened maps of that channel.

Every scale is a sigmoid output, so guided features never grow in
magnitude. At the first time step there is no previous output and the
features pass through unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import ParamSet, msra_init
from .tensor import ShapeError, Tensor, relu, sigmoid, sqrt

__all__ = [
    "GuidanceError",
    "SenetGuidanceParams",
    "GUIDANCE_VARIANTS",
    "senet_reduction",
    "init_senet_params",
    "senet_scales",
    "senet_guidance",
    "pointwise_scales",
    "pointwise_guidance",
    "channelwise_scales",
    "channelwise_guidance",
    "guide",
]

GUIDANCE_VARIANTS = ("none", "senet", "point", "channel")

# Added to the product of column norms; a zero column then yields a raw
# similarity of 0 and a scale of 0.5.
NORM_EPS = 1e-8


class GuidanceError(ValueError):
    """Bad guidance configuration or mismatched operands."""


@dataclass
class SenetGuidanceParams:
    """Bottleneck weights: (C, C/r) -> relu -> (C/r, C) -> sigmoid."""

    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor


def senet_reduction(channels: int, ratio: int = 16, min_hidden: int = 4) -> int:
    """Reduction ratio, shrunk so the bottleneck keeps >= min_hidden units."""
    r = ratio
    while r > 1 and (channels // r < min_hidden or channels % r):
        r //= 2
    if channels % r:
        raise GuidanceError(f"no admissible reduction ratio for {channels} channels")
    return r


def init_senet_params(
    params: ParamSet,
    prefix: str,
    channels: int,
    rng: np.random.Generator,
    dtype=np.float32,
) -> None:
    r = senet_reduction(channels)
    hidden = channels // r
    params.add(f"{prefix}/guide/w1", msra_init((channels, hidden), channels, rng, dtype))
    params.add(f"{prefix}/guide/b1", Tensor(np.zeros(hidden, dtype=dtype)))
    params.add(f"{prefix}/guide/w2", msra_init((hidden, channels), hidden, rng, dtype))
    params.add(f"{prefix}/guide/b2", Tensor(np.zeros(channels, dtype=dtype)))


def senet_params_from(params: ParamSet, prefix: str) -> SenetGuidanceParams:
    try:
        return SenetGuidanceParams(
            params[f"{prefix}/guide/w1"],
            params[f"{prefix}/guide/b1"],
            params[f"{prefix}/guide/w2"],
            params[f"{prefix}/guide/b2"],
        )
    except KeyError as exc:
        raise GuidanceError(f"missing guidance parameters under {prefix!r}/guide") from exc


def _check_pair(x: Tensor, o_prev: Tensor) -> None:
    if x.ndim != 3:
        raise ShapeError(f"features must be (C, H, W), got {x.shape}")
    if x.shape != o_prev.shape:
        raise ShapeError(f"guidance shapes differ: {x.shape} vs {o_prev.shape}")


def senet_scales(o_prev: Tensor, gp: SenetGuidanceParams) -> Tensor:
    """Per-channel scales in (0, 1) from the previous output alone."""
    gap = o_prev.mean(axis=(1, 2))
    hidden = relu(gap @ gp.w1 + gp.b1)
    return sigmoid(hidden @ gp.w2 + gp.b2)


def senet_guidance(x: Tensor, o_prev: Tensor, gp: SenetGuidanceParams) -> Tensor:
    _check_pair(x, o_prev)
    if gp.w1.shape[0] != x.shape[0]:
        raise ShapeError(f"guidance weights expect {gp.w1.shape[0]} channels, got {x.shape[0]}")
    s = senet_scales(o_prev, gp)
    return x * s.reshape(x.shape[0], 1, 1)


def _cosine_scales(x: Tensor, o_prev: Tensor, axis) -> Tensor:
    dot = (x * o_prev).sum(axis=axis, keepdims=True)
    nx = sqrt((x * x).sum(axis=axis, keepdims=True))
    no = sqrt((o_prev * o_prev).sum(axis=axis, keepdims=True))
    return sigmoid(dot / (nx * no + NORM_EPS))


def pointwise_scales(x: Tensor, o_prev: Tensor) -> Tensor:
    """(1, H, W) scales: cosine of the channel columns at each position."""
    _check_pair(x, o_prev)
    return _cosine_scales(x, o_prev, axis=0)


def pointwise_guidance(x: Tensor, o_prev: Tensor) -> Tensor:
    return x * pointwise_scales(x, o_prev)


def channelwise_scales(x: Tensor, o_prev: Tensor) -> Tensor:
    """(C, 1, 1) scales: cosine of the flattened per-channel maps."""
    _check_pair(x, o_prev)
    return _cosine_scales(x, o_prev, axis=(1, 2))


def channelwise_guidance(x: Tensor, o_prev: Tensor) -> Tensor:
    return x * channelwise_scales(x, o_prev)


def guide(
    x: Tensor,
    o_prev: Tensor | None,
    variant: str,
    gp: SenetGuidanceParams | None = None,
) -> Tensor:
    """Dispatch to a guidance mechanism; identity for "none".

    ``o_prev=None`` marks the first step of a sequence, where no context
    exists yet and the features pass through unscaled.
    """
    if variant not in GUIDANCE_VARIANTS:
        raise GuidanceError(f"unknown guidance variant {variant!r}")
    if variant == "none" or o_prev is None:
        return x
    if variant == "senet":
        if gp is None:
            raise GuidanceError("senet guidance requires its bottleneck parameters")
        return senet_guidance(x, o_prev, gp)
    if variant == "point":
        return pointwise_guidance(x, o_prev)
    return channelwise_guidance(x, o_prev)
