"""End-to-end training loop: Adam, polynomial LR decay, loss curve.

Deterministic by construction: parameter init, epoch shuffling, and
window selection all draw from one Philox stream, batch losses are
averaged in a fixed order, and the optimizer touches parameters in
insertion order. Two runs with the same seed and config produce
bit-identical parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .datasets import SequenceSample
from .model import ModelConfig, init_model_params, sequence_loss
from .optim import AdamState, adam_step, poly_lr
from .params import ParamSet, gradients, make_rng
from .tensor import NumericsError

__all__ = ["TrainConfig", "TrainResult", "TrainingDivergedError", "train", "write_loss_curve"]


class TrainingDivergedError(NumericsError):
    """Loss became NaN/Inf during training."""


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer hyperparameters and run length."""

    lr: float = 1e-4
    iterations: int = 2000
    batch_size: int = 4
    weight_decay: float = 1e-4
    lr_power: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 0 or self.batch_size < 1:
            raise ValueError("iterations must be >= 0 and batch_size >= 1")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")


@dataclass
class TrainResult:
    params: ParamSet
    state: AdamState
    loss_curve: list[tuple[int, float]]


def _window(sample: SequenceSample, seq_len: int, rng: np.random.Generator) -> SequenceSample:
    n = len(sample)
    if n <= seq_len:
        return sample
    start = int(rng.integers(0, n - seq_len + 1))
    return SequenceSample(sample.frames[start : start + seq_len], sample.poses[start : start + seq_len])


def train(
    dataset: Sequence[SequenceSample],
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    params: ParamSet | None = None,
) -> TrainResult:
    """Optimize the model on fixed-length windows of the dataset.

    With ``iterations == 0`` the returned parameters are exactly the
    initialization. Raises :class:`TrainingDivergedError` the moment the
    batch loss stops being finite.
    """
    if not dataset:
        raise ValueError("dataset is empty")
    rng = make_rng(train_cfg.seed)
    if params is None:
        params = init_model_params(model_cfg, seed=train_cfg.seed)
    state = AdamState.zeros_like(params)
    loss_curve: list[tuple[int, float]] = []

    order: list[int] = []
    for iteration in range(train_cfg.iterations):
        batch = []
        for _ in range(train_cfg.batch_size):
            if not order:
                order = list(rng.permutation(len(dataset)))
            batch.append(dataset[order.pop()])
        loss = None
        for sample in batch:
            window = _window(sample, model_cfg.seq_len, rng)
            term = sequence_loss(window, params, model_cfg)
            loss = term if loss is None else loss + term
        loss = loss * (1.0 / len(batch))
        value = float(loss.data)
        if not np.isfinite(value):
            raise TrainingDivergedError(
                f"loss became non-finite ({value}) at iteration {iteration}"
            )
        loss_curve.append((iteration, value))
        grads = gradients(loss, params)
        lr = poly_lr(iteration, train_cfg.iterations, train_cfg.lr, train_cfg.lr_power)
        adam_step(
            params,
            grads,
            state,
            lr,
            beta1=train_cfg.beta1,
            beta2=train_cfg.beta2,
            weight_decay=train_cfg.weight_decay,
        )
    return TrainResult(params, state, loss_curve)


def write_loss_curve(loss_curve: Sequence[tuple[int, float]], path) -> None:
    """CSV with one "iteration,loss" line per optimizer step."""
    lines = [f"{it},{value:.9g}" for it, value in loss_curve]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))
