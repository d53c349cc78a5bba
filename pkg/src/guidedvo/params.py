"""Named parameter collections and weight initialization.

All randomness in the repo flows through numpy's Philox generator, a
counter-based RNG that is fully reproducible from an integer seed.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .tensor import ShapeError, Tensor

__all__ = ["ParamSet", "make_rng", "msra_init"]


def make_rng(seed: int) -> np.random.Generator:
    """Philox-backed generator; identical seeds give identical streams."""
    return np.random.Generator(np.random.Philox(seed))


def msra_init(shape, fan_in: int, rng, dtype=np.float32) -> Tensor:
    """Gaussian weights with variance 2/fan_in.

    ``rng`` may be an integer seed or a numpy Generator.
    """
    if fan_in < 1:
        raise ValueError(f"fan_in must be >= 1, got {fan_in}")
    if isinstance(rng, (int, np.integer)):
        rng = make_rng(int(rng))
    std = float(np.sqrt(2.0 / fan_in))
    data = rng.normal(0.0, std, size=tuple(shape)).astype(dtype)
    return Tensor(data, requires_grad=True)


class ParamSet:
    """Ordered mapping of unique names to parameter tensors.

    Entries are trainable unless added with ``trainable=False``; frozen
    entries keep ``requires_grad`` off so the graph never records them.
    Iteration order is insertion order everywhere, which is what makes
    training runs and checkpoints reproducible.
    """

    def __init__(self):
        self._entries: dict[str, tuple[Tensor, bool]] = {}

    def add(self, name: str, tensor: Tensor, trainable: bool = True) -> Tensor:
        if name in self._entries:
            raise ValueError(f"duplicate parameter name: {name!r}")
        tensor.requires_grad = trainable
        self._entries[name] = (tensor, trainable)
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._entries[name][0]

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def names(self) -> list[str]:
        return list(self._entries)

    def is_trainable(self, name: str) -> bool:
        return self._entries[name][1]

    def items(self) -> Iterator[tuple[str, Tensor]]:
        for name, (tensor, _) in self._entries.items():
            yield name, tensor

    def trainable_items(self) -> Iterator[tuple[str, Tensor]]:
        for name, (tensor, trainable) in self._entries.items():
            if trainable:
                yield name, tensor

    def count_values(self) -> int:
        return sum(t.size for _, t in self.items())

    def clear_grads(self) -> None:
        for _, tensor in self.items():
            tensor.grad = None

    def copy(self) -> "ParamSet":
        """Deep copy of values and flags (used to snapshot checkpoints)."""
        out = ParamSet()
        for name, (tensor, trainable) in self._entries.items():
            out.add(name, Tensor(tensor.data.copy()), trainable)
        return out


def gradients(loss: Tensor, params: ParamSet) -> dict[str, np.ndarray]:
    """Gradient of a scalar loss for every trainable parameter.

    Parameters the loss does not depend on get an explicit zero array.
    """
    if loss.ndim != 0:
        raise ShapeError(f"loss must be scalar, got shape {loss.shape}")
    params.clear_grads()
    loss.backward()
    grads: dict[str, np.ndarray] = {}
    for name, tensor in params.trainable_items():
        grads[name] = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
    return grads


__all__.append("gradients")
