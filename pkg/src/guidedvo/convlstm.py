"""Single convolutional LSTM unit that preserves spatial structure.

Gate transforms are 3x3 same-padded convolutions of the input and the
previous hidden map, so hidden state, cell, and output all keep the input
shape (C, H, W). Hidden width equals input width: the guidance mechanisms
correlate the previous output with the next input elementwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conv import conv2d
from .params import ParamSet, msra_init
from .tensor import ShapeError, Tensor, sigmoid, tanh

__all__ = ["BranchState", "init_convlstm_params", "convlstm_step"]

KERNEL = 3
# channel blocks in the fused gate convolution, in order
GATES = ("input", "forget", "candidate", "output")


@dataclass
class BranchState:
    """Hidden and cell maps carried across time steps of one branch."""

    hidden: Tensor
    cell: Tensor

    @classmethod
    def zeros(cls, channels: int, height: int, width: int, dtype=np.float32) -> "BranchState":
        shape = (channels, height, width)
        return cls(Tensor(np.zeros(shape, dtype=dtype)), Tensor(np.zeros(shape, dtype=dtype)))


def init_convlstm_params(
    params: ParamSet,
    prefix: str,
    channels: int,
    rng: np.random.Generator,
    dtype=np.float32,
    forget_bias: float = 1.0,
) -> None:
    """MSRA weights; biases zero except the forget gate, which starts at
    +1 so the cell carries memory from the first updates on."""
    fan_in = channels * KERNEL * KERNEL
    shape = (4 * channels, channels, KERNEL, KERNEL)
    params.add(f"{prefix}/lstm/w_x", msra_init(shape, fan_in, rng, dtype))
    params.add(f"{prefix}/lstm/w_h", msra_init(shape, fan_in, rng, dtype))
    bias = np.zeros(4 * channels, dtype=dtype)
    bias[channels : 2 * channels] = forget_bias
    params.add(f"{prefix}/lstm/bias", Tensor(bias))


def convlstm_step(
    x: Tensor,
    state: BranchState,
    params: ParamSet,
    prefix: str,
) -> tuple[Tensor, BranchState]:
    """Advance one time step; returns (output, new state).

    i, f, o = sigmoid(conv(x) + conv(h) + b), g = tanh(conv(x) + conv(h) + b),
    cell' = f*cell + i*g, hidden' = o * tanh(cell'), output = hidden'.
    """
    if x.ndim != 3:
        raise ShapeError(f"input must be (C, H, W), got {x.shape}")
    if x.shape != state.hidden.shape or x.shape != state.cell.shape:
        raise ShapeError(
            f"state shape {state.hidden.shape} does not match input {x.shape}"
        )
    c = x.shape[0]
    pad = (KERNEL - 1) // 2
    z = conv2d(x, params[f"{prefix}/lstm/w_x"], params[f"{prefix}/lstm/bias"], 1, pad)
    z = z + conv2d(state.hidden, params[f"{prefix}/lstm/w_h"], None, 1, pad)
    gate_i = sigmoid(z[0 * c : 1 * c])
    gate_f = sigmoid(z[1 * c : 2 * c])
    gate_g = tanh(z[2 * c : 3 * c])
    gate_o = sigmoid(z[3 * c : 4 * c])
    cell = gate_f * state.cell + gate_i * gate_g
    hidden = gate_o * tanh(cell)
    return hidden, BranchState(hidden, cell)
