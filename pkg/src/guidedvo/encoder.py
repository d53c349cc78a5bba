"""Convolutional encoder mapping a stacked frame pair to a feature map.

The stack is the 9-conv front of the classic optical-flow network
(FlowNetSimple): strides multiply to 64 in each spatial dimension and the
full-width output has 1024 channels. A channel multiplier scales every
layer width by the same rational factor so the whole model shrinks to
CPU-trainable sizes without changing any shape relationships.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conv import conv2d
from .params import ParamSet, msra_init
from .tensor import ShapeError, Tensor, concat, leaky_relu

__all__ = ["EncoderConfig", "ENCODER_LAYERS", "init_encoder_params", "encode_pair"]

# name, kernel, stride, full-width output channels
ENCODER_LAYERS = (
    ("conv1", 7, 2, 64),
    ("conv2", 5, 2, 128),
    ("conv3", 5, 2, 256),
    ("conv3_1", 3, 1, 256),
    ("conv4", 3, 2, 512),
    ("conv4_1", 3, 1, 512),
    ("conv5", 3, 2, 512),
    ("conv5_1", 3, 1, 512),
    ("conv6", 3, 2, 1024),
)

DOWNSAMPLE = 64
IN_CHANNELS = 6  # two stacked RGB frames


@dataclass(frozen=True)
class EncoderConfig:
    """Width scaling and activation slope for the conv stack."""

    channel_multiplier: float = 1.0
    leaky_slope: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.channel_multiplier <= 1.0:
            raise ValueError(f"channel_multiplier must be in (0, 1], got {self.channel_multiplier}")
        self.widths()  # validate integrality eagerly

    def widths(self) -> list[int]:
        out = []
        for name, _, _, full in ENCODER_LAYERS:
            scaled = full * self.channel_multiplier
            rounded = int(round(scaled))
            if rounded < 1 or abs(scaled - rounded) > 1e-9:
                raise ValueError(
                    f"channel_multiplier {self.channel_multiplier} does not scale "
                    f"{name} ({full} channels) to a positive integer"
                )
            out.append(rounded)
        return out

    @property
    def out_channels(self) -> int:
        return self.widths()[-1]


def init_encoder_params(
    params: ParamSet,
    cfg: EncoderConfig,
    rng: np.random.Generator,
    dtype=np.float32,
    prefix: str = "encoder",
) -> None:
    c_in = IN_CHANNELS
    for (name, k, _, _), c_out in zip(ENCODER_LAYERS, cfg.widths()):
        params.add(f"{prefix}/{name}/weight", msra_init((c_out, c_in, k, k), c_in * k * k, rng, dtype))
        params.add(f"{prefix}/{name}/bias", Tensor(np.zeros(c_out, dtype=dtype)))
        c_in = c_out


def encode_pair(
    prev: Tensor,
    curr: Tensor,
    params: ParamSet,
    cfg: EncoderConfig,
    prefix: str = "encoder",
) -> Tensor:
    """Stack two normalized (3, H, W) frames and run the conv pyramid.

    Output is (C, H/64, W/64) with C = 1024 * channel_multiplier; the map
    stays 3-D so downstream mechanisms can reason over space.
    """
    if prev.shape != curr.shape:
        raise ShapeError(f"frame shapes differ: {prev.shape} vs {curr.shape}")
    if prev.ndim != 3 or prev.shape[0] != 3:
        raise ShapeError(f"frames must be (3, H, W), got {prev.shape}")
    _, h, w = prev.shape
    if h % DOWNSAMPLE or w % DOWNSAMPLE:
        raise ShapeError(f"spatial size {h}x{w} must be divisible by {DOWNSAMPLE}")
    x = concat([prev, curr], axis=0)
    for name, k, stride, _ in ENCODER_LAYERS:
        x = conv2d(
            x,
            params[f"{prefix}/{name}/weight"],
            params[f"{prefix}/{name}/bias"],
            stride=stride,
            padding=(k - 1) // 2,
        )
        x = leaky_relu(x, cfg.leaky_slope)
    return x
