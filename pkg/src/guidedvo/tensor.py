"""Reverse-mode automatic differentiation over dense numpy arrays.

Every operation records its inputs and a backward closure; calling
:meth:`Tensor.backward` on a scalar replays the graph in reverse
topological order and accumulates exact gradients into the leaves.

Storage is float32 by default (pass float64 arrays or ``dtype=np.float64``
to build a double-precision graph, which is what the finite-difference
checks use). Values produced by the engine are treated as immutable; the
only sanctioned in-place mutation is the optimizer updating leaf
parameters between graphs.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

__all__ = [
    "Tensor",
    "EngineError",
    "ShapeError",
    "NumericsError",
    "activation",
    "sigmoid",
    "relu",
    "leaky_relu",
    "tanh",
    "sqrt",
    "sin",
    "cos",
    "asin",
    "atan2",
    "concat",
    "stack",
]


class EngineError(Exception):
    """Base class for tensor-engine failures."""


class ShapeError(EngineError):
    """Operands have incompatible or unsupported shapes."""


class NumericsError(EngineError):
    """NaN or Inf encountered where finite values are required."""


# Guard for gradients of sqrt/asin style ops at the edge of their domain.
# Chains that hit the guard carry a zero upstream gradient, so clamping
# only prevents 0 * inf from turning into NaN.
_DENOM_FLOOR = 1e-30

# When set to a list, relu/leaky_relu record their sign masks here. The
# finite-difference harness uses this to prove a perturbation kept the
# network inside one smooth region (a kink inside the probe interval
# makes the central difference meaningless at that coordinate).
KINK_TRACE: list | None = None


def _as_array(values, dtype=None) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.dtype.kind != "f":
        arr = arr.astype(np.float32)
    return arr


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the shape of its source."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """Dense N-dimensional array node in the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, values, requires_grad: bool = False, dtype=None):
        self.data = _as_array(values, dtype)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple = ()
        self._backward = None

    # -- introspection -------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        """The underlying array. Treat as read-only."""
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def check_finite(self, context: str = "tensor") -> "Tensor":
        if not np.all(np.isfinite(self.data)):
            raise NumericsError(f"{context} contains NaN or Inf")
        return self

    def __repr__(self) -> str:
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{flag})"

    # -- graph plumbing ------------------------------------------------

    def _attach(self, parents: tuple, backward) -> "Tensor":
        if any(p.requires_grad for p in parents):
            self.requires_grad = True
            self._parents = parents
            self._backward = backward
        return self

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into ``grad`` of every reachable leaf.

        Only defined for scalar (0-d) tensors.
        """
        if self.ndim != 0:
            raise ShapeError(f"backward requires a scalar loss, got shape {self.shape}")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones((), dtype=self.data.dtype)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    # -- arithmetic ----------------------------------------------------

    def _coerce(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.data.dtype))

    def __add__(self, other):
        other = self._coerce(other)
        out = Tensor(self.data + other.data)

        def backward(g):
            _accum(self, _unbroadcast(g, self.shape))
            _accum(other, _unbroadcast(g, other.shape))

        return out._attach((self, other), backward)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        out = Tensor(self.data - other.data)

        def backward(g):
            _accum(self, _unbroadcast(g, self.shape))
            _accum(other, _unbroadcast(-g, other.shape))

        return out._attach((self, other), backward)

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __mul__(self, other):
        other = self._coerce(other)
        out = Tensor(self.data * other.data)

        def backward(g):
            _accum(self, _unbroadcast(g * other.data, self.shape))
            _accum(other, _unbroadcast(g * self.data, other.shape))

        return out._attach((self, other), backward)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        out = Tensor(self.data / other.data)

        def backward(g):
            _accum(self, _unbroadcast(g / other.data, self.shape))
            _accum(other, _unbroadcast(-g * self.data / (other.data * other.data), other.shape))

        return out._attach((self, other), backward)

    def __rtruediv__(self, other):
        return self._coerce(other).__truediv__(self)

    def __neg__(self):
        out = Tensor(-self.data)

        def backward(g):
            _accum(self, -g)

        return out._attach((self,), backward)

    def __matmul__(self, other):
        if not isinstance(other, Tensor):
            raise TypeError("matmul requires a Tensor operand")
        a, b = self, other
        if a.ndim not in (1, 2) or b.ndim not in (1, 2):
            raise ShapeError(f"matmul supports 1-D/2-D operands, got {a.shape} @ {b.shape}")
        if a.shape[-1] != b.shape[0]:
            raise ShapeError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
        out = Tensor(a.data @ b.data)

        def backward(g):
            if a.ndim == 2 and b.ndim == 2:
                _accum(a, g @ b.data.T)
                _accum(b, a.data.T @ g)
            elif a.ndim == 2 and b.ndim == 1:
                _accum(a, np.outer(g, b.data))
                _accum(b, a.data.T @ g)
            elif a.ndim == 1 and b.ndim == 2:
                _accum(a, b.data @ g)
                _accum(b, np.outer(a.data, g))
            else:
                _accum(a, g * b.data)
                _accum(b, g * a.data)

        return out._attach((a, b), backward)

    # -- reductions and reshapes ----------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims))
        shape = self.shape

        def backward(g):
            if axis is None:
                _accum(self, np.broadcast_to(g, shape))
            else:
                gg = g if keepdims else np.expand_dims(g, axis)
                _accum(self, np.broadcast_to(gg, shape))

        return out._attach((self,), backward)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        if axis is None:
            count = self.size
        else:
            axes = (axis,) if isinstance(axis, int) else tuple(axis)
            count = 1
            for ax in axes:
                count *= self.shape[ax]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = Tensor(self.data.reshape(shape))
        orig = self.shape

        def backward(g):
            _accum(self, g.reshape(orig))

        return out._attach((self,), backward)

    def __getitem__(self, idx) -> "Tensor":
        out = Tensor(np.asarray(self.data[idx]))
        shape, dtype = self.shape, self.data.dtype

        def backward(g):
            full = np.zeros(shape, dtype=dtype)
            full[idx] = g
            _accum(self, full)

        return out._attach((self,), backward)


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    # Never mutate an existing grad buffer in place: it may be aliased by
    # another node's gradient (e.g. the pass-through of an add).
    if t.grad is None:
        t.grad = g
    else:
        t.grad = t.grad + g


# -- activations --------------------------------------------------------


def _sigmoid_values(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(x: Tensor) -> Tensor:
    """Logistic function. Output lies in (0, 1), saturating to the closed
    endpoints only when the input exceeds the float's exp range."""
    out = Tensor(_sigmoid_values(x.data))

    def backward(g):
        _accum(x, g * out.data * (1.0 - out.data))

    return out._attach((x,), backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    if KINK_TRACE is not None:
        KINK_TRACE.append(mask)
    out = Tensor(np.maximum(x.data, 0))

    def backward(g):
        _accum(x, g * mask)

    return out._attach((x,), backward)


def leaky_relu(x: Tensor, alpha: float = 0.1) -> Tensor:
    mask = x.data > 0
    if KINK_TRACE is not None:
        KINK_TRACE.append(mask)
    out = Tensor(np.where(mask, x.data, alpha * x.data))

    def backward(g):
        _accum(x, g * np.where(mask, 1.0, alpha).astype(x.data.dtype))

    return out._attach((x,), backward)


def tanh(x: Tensor) -> Tensor:
    out = Tensor(np.tanh(x.data))

    def backward(g):
        _accum(x, g * (1.0 - out.data * out.data))

    return out._attach((x,), backward)


def activation(x: Tensor, kind: str, alpha: float = 0.1) -> Tensor:
    """Elementwise nonlinearity dispatch: sigmoid | relu | leaky_relu | tanh."""
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "relu":
        return relu(x)
    if kind == "leaky_relu":
        return leaky_relu(x, alpha)
    if kind == "tanh":
        return tanh(x)
    raise ValueError(f"unknown activation kind: {kind!r}")


# -- scalar math used by the pose chain ---------------------------------


def sqrt(x: Tensor) -> Tensor:
    out = Tensor(np.sqrt(x.data))

    def backward(g):
        _accum(x, g * 0.5 / np.maximum(out.data, _DENOM_FLOOR))

    return out._attach((x,), backward)


def sin(x: Tensor) -> Tensor:
    out = Tensor(np.sin(x.data))

    def backward(g):
        _accum(x, g * np.cos(x.data))

    return out._attach((x,), backward)


def cos(x: Tensor) -> Tensor:
    out = Tensor(np.cos(x.data))

    def backward(g):
        _accum(x, -g * np.sin(x.data))

    return out._attach((x,), backward)


def asin(x: Tensor) -> Tensor:
    out = Tensor(np.arcsin(np.clip(x.data, -1.0, 1.0)))

    def backward(g):
        _accum(x, g / np.sqrt(np.maximum(1.0 - x.data * x.data, _DENOM_FLOOR)))

    return out._attach((x,), backward)


def atan2(y: Tensor, x: Tensor) -> Tensor:
    out = Tensor(np.arctan2(y.data, x.data))

    def backward(g):
        denom = np.maximum(y.data * y.data + x.data * x.data, _DENOM_FLOOR)
        _accum(y, g * x.data / denom)
        _accum(x, -g * y.data / denom)

    return out._attach((y, x), backward)


# -- structural ops ------------------------------------------------------


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    ts = list(tensors)
    if not ts:
        raise ShapeError("concat of an empty sequence")
    out = Tensor(np.concatenate([t.data for t in ts], axis=axis))
    sizes = [t.shape[axis] for t in ts]

    def backward(g):
        offset = 0
        for t, n in zip(ts, sizes):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(offset, offset + n)
            _accum(t, g[tuple(sl)])
            offset += n

    return out._attach(tuple(ts), backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    ts = list(tensors)
    if not ts:
        raise ShapeError("stack of an empty sequence")
    out = Tensor(np.stack([t.data for t in ts], axis=axis))

    def backward(g):
        for i, t in enumerate(ts):
            _accum(t, np.take(g, i, axis=axis))

    return out._attach(tuple(ts), backward)
