"""2-D convolution for single images, differentiable through the engine.

Layout is channels-first: input (C_in, H, W), weight (C_out, C_in, kH, kW).
Zero padding only; output extents follow
``H' = (H + 2*padding - kH) // stride + 1`` and likewise for W.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import ShapeError, Tensor, _accum

__all__ = ["conv2d", "conv_output_size"]


def conv_output_size(extent: int, kernel: int, stride: int, padding: int) -> int:
    return (extent + 2 * padding - kernel) // stride + 1


def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor | None = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """Correlate ``x`` with ``weight`` (the usual CNN convention).

    Raises :class:`ShapeError` when the input channel count does not match
    the weight, or when the kernel does not fit in the padded input.
    """
    if x.ndim != 3:
        raise ShapeError(f"conv2d input must be (C, H, W), got {x.shape}")
    if weight.ndim != 4:
        raise ShapeError(f"conv2d weight must be (C_out, C_in, kH, kW), got {weight.shape}")
    c_in, h, w = x.shape
    c_out, wc_in, kh, kw = weight.shape
    if wc_in != c_in:
        raise ShapeError(
            f"conv2d channel mismatch: input has {c_in} channels, weight expects {wc_in}"
        )
    if stride < 1:
        raise ShapeError(f"conv2d stride must be >= 1, got {stride}")
    if padding < 0:
        raise ShapeError(f"conv2d padding must be >= 0, got {padding}")
    if kh > h + 2 * padding or kw > w + 2 * padding:
        raise ShapeError(
            f"kernel {kh}x{kw} exceeds padded input {h + 2 * padding}x{w + 2 * padding}"
        )
    if bias is not None and bias.shape != (c_out,):
        raise ShapeError(f"conv2d bias must be ({c_out},), got {bias.shape}")

    h_out = conv_output_size(h, kh, stride, padding)
    w_out = conv_output_size(w, kw, stride, padding)

    # On a 1x1 map only the kernel tap aligned with the pixel sees data;
    # the rest multiply padding. Collapse to a plain matrix-vector product.
    if (h, w, h_out, w_out) == (1, 1, 1, 1) and padding < kh and padding < kw:
        return _conv2d_1x1_map(x, weight, bias, padding)

    if padding:
        xp = np.zeros((c_in, h + 2 * padding, w + 2 * padding), dtype=x.data.dtype)
        xp[:, padding : padding + h, padding : padding + w] = x.data
    else:
        xp = x.data
    windows = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    # (C_in, H', W', kH, kW) -> (C_in*kH*kW, H'*W')
    cols = windows.transpose(0, 3, 4, 1, 2).reshape(c_in * kh * kw, h_out * w_out)
    w2 = weight.data.reshape(c_out, c_in * kh * kw)
    out_data = (w2 @ cols).reshape(c_out, h_out, w_out)
    if bias is not None:
        out_data = out_data + bias.data[:, None, None]
    out = Tensor(out_data)

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        g2 = g.reshape(c_out, h_out * w_out)
        if weight.requires_grad:
            _accum(weight, (g2 @ cols.T).reshape(weight.shape))
        if x.requires_grad:
            dcols = (w2.T @ g2).reshape(c_in, kh, kw, h_out, w_out)
            hp, wp = h + 2 * padding, w + 2 * padding
            dxp = np.zeros((c_in, hp, wp), dtype=g.dtype)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, i : i + stride * h_out : stride, j : j + stride * w_out : stride] += dcols[:, i, j]
            if padding:
                dxp = dxp[:, padding : padding + h, padding : padding + w]
            _accum(x, dxp)
        if bias is not None:
            _accum(bias, g.sum(axis=(1, 2)))

    return out._attach(parents, backward)


def _conv2d_1x1_map(x: Tensor, weight: Tensor, bias: Tensor | None, padding: int) -> Tensor:
    c_out, c_in = weight.shape[0], weight.shape[1]
    w_eff = np.ascontiguousarray(weight.data[:, :, padding, padding])
    x_vec = x.data.reshape(c_in)
    out_data = w_eff @ x_vec
    if bias is not None:
        out_data = out_data + bias.data
    out = Tensor(out_data.reshape(c_out, 1, 1))

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        g_vec = g.reshape(c_out)
        if weight.requires_grad:
            dw = np.zeros(weight.shape, dtype=g.dtype)
            dw[:, :, padding, padding] = np.outer(g_vec, x_vec)
            _accum(weight, dw)
        if x.requires_grad:
            _accum(x, (w_eff.T @ g_vec).reshape(c_in, 1, 1))
        if bias is not None:
            _accum(bias, g_vec)

    return out._attach(parents, backward)
