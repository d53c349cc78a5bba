"""Adam with decoupled weight decay, and the polynomial LR schedule."""

from __future__ import annotations

import numpy as np

from .params import ParamSet
from .tensor import ShapeError

__all__ = ["AdamState", "adam_step", "poly_lr"]


class AdamState:
    """First/second moment buffers plus the shared step counter."""

    def __init__(self, m: dict[str, np.ndarray], v: dict[str, np.ndarray], step: int = 0):
        self.m = m
        self.v = v
        self.step = step

    @classmethod
    def zeros_like(cls, params: ParamSet) -> "AdamState":
        m = {name: np.zeros_like(t.data) for name, t in params.trainable_items()}
        v = {name: np.zeros_like(t.data) for name, t in params.trainable_items()}
        return cls(m, v, step=0)


def adam_step(
    params: ParamSet,
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.99,
    eps: float = 1e-8,
    weight_decay: float = 1e-4,
) -> None:
    """One bias-corrected Adam update, in place on the trainable entries.

    Weight decay is decoupled: ``lr * weight_decay * param`` is subtracted
    directly instead of being folded into the gradient, so with zero
    gradients and zero decay the parameters are a fixed point.
    """
    state.step += 1
    t = state.step
    m_corr = 1.0 - beta1**t
    v_corr = 1.0 - beta2**t
    for name, param in params.trainable_items():
        if name not in grads:
            raise KeyError(f"missing gradient for parameter {name!r}")
        g = grads[name]
        if g.shape != param.data.shape:
            raise ShapeError(
                f"gradient shape {g.shape} does not match parameter {name!r} {param.data.shape}"
            )
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        # lr * (m / m_corr) / (sqrt(v / v_corr) + eps), fused
        denom = np.sqrt(v)
        denom *= 1.0 / np.sqrt(v_corr)
        denom += eps
        update = m * (lr / m_corr)
        update /= denom
        param.data -= update.astype(param.data.dtype, copy=False)
        if weight_decay:
            param.data *= 1.0 - lr * weight_decay


def poly_lr(iteration: int, max_iter: int, base_lr: float, power: float = 0.9) -> float:
    """Polynomial decay ``base_lr * (1 - iteration/max_iter) ** power``.

    Monotonically non-increasing from ``base_lr`` at 0 down to 0 at
    ``max_iter``; iterations past the end are rejected.
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    if iteration < 0 or iteration > max_iter:
        raise ValueError(f"iteration {iteration} outside [0, {max_iter}]")
    return base_lr * (1.0 - iteration / max_iter) ** power
