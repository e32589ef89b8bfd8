"""Differentiable layer operations.

Every op accepts unbatched ``(h, w, c)`` or batched ``(n, h, w, c)``
activations and returns the same rank it was given.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from chanest.errors import ParameterError, ShapeError
from chanest.tensor.autograd import Tensor, as_tensor, make_result


def _batched(x: np.ndarray) -> tuple[np.ndarray, bool]:
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise ShapeError("activation must be (h, w, c) or (n, h, w, c)", x.shape)


def _unbatch(x: np.ndarray, squeeze: bool) -> np.ndarray:
    return x[0] if squeeze else x


def same_padding(k: int) -> tuple[int, int]:
    """Zero padding (before, after) that keeps a stride-1 extent unchanged."""
    return (k - 1) // 2, k - 1 - (k - 1) // 2


def _row_windows(xp: np.ndarray, kw: int) -> np.ndarray:
    """Width windows of (n, Hp, Wp, c) laid out height-major: (Hp, n * w, c * kw)."""
    n, hp, wp, c = xp.shape
    win = sliding_window_view(xp, kw, axis=2)  # n, Hp, w, c, kw
    win = np.ascontiguousarray(win.transpose(1, 0, 2, 3, 4))
    return win.reshape(hp, n * (wp - kw + 1), c * kw)


def _row_kernels(kernel: np.ndarray) -> np.ndarray:
    """(kh, kw, c, o) -> (kh, c * kw, o) matching ``_row_windows`` ordering."""
    kh, kw, c, o = kernel.shape
    return kernel.transpose(0, 2, 1, 3).reshape(kh, c * kw, o)


def correlate(xp: np.ndarray, kernel: np.ndarray, windows: np.ndarray | None = None) -> np.ndarray:
    """Valid 2-D cross-correlation of (n, H, W, c) with (kh, kw, c, o)."""
    kh, kw, _, c_out = kernel.shape
    n, hp, wp, _ = xp.shape
    h, w = hp - kh + 1, wp - kw + 1
    win = _row_windows(xp, kw) if windows is None else windows
    rows = _row_kernels(kernel)
    out = np.zeros((h, n * w, c_out), dtype=np.result_type(xp, kernel))
    for di in range(kh):
        out += win[di:di + h] @ rows[di]
    return out.reshape(h, n, w, c_out).transpose(1, 0, 2, 3)


def _resolve_padding(padding, kh: int, kw: int) -> tuple[tuple[int, int], tuple[int, int]]:
    if padding == "same":
        return same_padding(kh), same_padding(kw)
    try:
        (pt, pb), (pl, pr) = padding
    except (TypeError, ValueError):
        raise ParameterError(f"padding must be 'same' or ((top, bottom), (left, right)), got {padding!r}")
    return (int(pt), int(pb)), (int(pl), int(pr))


def conv2d(x, kernel, bias, padding="same") -> Tensor:
    """Stride-1 2-D convolution (cross-correlation) with zero padding."""
    x, kernel, bias = as_tensor(x), as_tensor(kernel), as_tensor(bias)
    xb, squeeze = _batched(x.data)
    if kernel.data.ndim != 4:
        raise ShapeError("kernel must be (kh, kw, c_in, c_out)", kernel.shape)
    kh, kw, c_in, c_out = kernel.shape
    if xb.shape[-1] != c_in:
        raise ShapeError("conv2d input channels do not match kernel c_in", x.shape, kernel.shape)
    if bias.shape != (c_out,):
        raise ShapeError("conv2d bias must be (c_out,)", bias.shape, kernel.shape)
    (pt, pb), (pl, pr) = _resolve_padding(padding, kh, kw)

    xp = np.pad(xb, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    windows = _row_windows(xp, kw)
    out = correlate(xp, kernel.data, windows) + bias.data
    n, h_out, w_out, _ = out.shape

    def backward(g):
        gb = g[None] if squeeze else g
        g_bias = gb.sum(axis=(0, 1, 2))
        g_rows = np.ascontiguousarray(gb.transpose(1, 0, 2, 3)).reshape(h_out * n * w_out, c_out)
        g_kernel = np.empty((kh, c_in * kw, c_out), dtype=kernel.dtype)
        for di in range(kh):
            g_kernel[di] = windows[di:di + h_out].reshape(-1, c_in * kw).T @ g_rows
        g_kernel = g_kernel.reshape(kh, c_in, kw, c_out).transpose(0, 2, 1, 3)
        g_x = None
        if x.requires_grad:
            gp = np.pad(gb, ((0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1), (0, 0)))
            flipped = kernel.data[::-1, ::-1].transpose(0, 1, 3, 2)
            g_xp = correlate(gp, flipped)
            g_x = _unbatch(g_xp[:, pt:pt + xb.shape[1], pl:pl + xb.shape[2]], squeeze)
        return g_x, g_kernel, g_bias

    return make_result(_unbatch(out, squeeze), (x, kernel, bias), backward)


def _fit_offsets(full: int, target: int) -> tuple[slice, slice]:
    """Slices (into full, into target) for a centered crop or zero pad."""
    if full >= target:
        start = (full - target) // 2
        return slice(start, start + target), slice(0, target)
    start = (target - full) // 2
    return slice(0, full), slice(start, start + full)


def transposed_conv2d(x, kernel, bias, stride: tuple[int, int], target: tuple[int, int]) -> Tensor:
    """Strided transposed convolution, center-cropped or zero-padded to ``target``."""
    x, kernel, bias = as_tensor(x), as_tensor(kernel), as_tensor(bias)
    s_h, s_w = (int(s) for s in stride)
    if s_h <= 0 or s_w <= 0:
        raise ParameterError(f"stride must be positive, got {tuple(stride)}")
    t_h, t_w = (int(t) for t in target)
    if t_h < 1 or t_w < 1:
        raise ParameterError(f"target extents must be positive, got {tuple(target)}")
    xb, squeeze = _batched(x.data)
    if kernel.data.ndim != 4:
        raise ShapeError("kernel must be (kh, kw, c_in, c_out)", kernel.shape)
    kh, kw, c_in, c_out = kernel.shape
    if xb.shape[-1] != c_in:
        raise ShapeError("transposed_conv2d input channels do not match kernel c_in", x.shape, kernel.shape)
    if bias.shape != (c_out,):
        raise ShapeError("transposed_conv2d bias must be (c_out,)", bias.shape, kernel.shape)

    n, h, w, _ = xb.shape
    f_h, f_w = (h - 1) * s_h + kh, (w - 1) * s_w + kw
    rows_full, rows_out = _fit_offsets(f_h, t_h)
    cols_full, cols_out = _fit_offsets(f_w, t_w)
    dtype = np.result_type(xb, kernel.data)

    full = np.zeros((n, f_h, f_w, c_out), dtype=dtype)
    for di in range(kh):
        for dj in range(kw):
            full[:, di:di + (h - 1) * s_h + 1:s_h, dj:dj + (w - 1) * s_w + 1:s_w] += xb @ kernel.data[di, dj]
    out = np.zeros((n, t_h, t_w, c_out), dtype=dtype)
    out[:, rows_out, cols_out] = full[:, rows_full, cols_full]
    out += bias.data

    def backward(g):
        gb = g[None] if squeeze else g
        g_full = np.zeros((n, f_h, f_w, c_out), dtype=dtype)
        g_full[:, rows_full, cols_full] = gb[:, rows_out, cols_out]
        g_x = np.zeros_like(xb)
        g_kernel = np.empty_like(kernel.data)
        for di in range(kh):
            for dj in range(kw):
                tap = g_full[:, di:di + (h - 1) * s_h + 1:s_h, dj:dj + (w - 1) * s_w + 1:s_w]
                g_x += tap @ kernel.data[di, dj].T
                g_kernel[di, dj] = np.tensordot(xb, tap, axes=([0, 1, 2], [0, 1, 2]))
        return _unbatch(g_x, squeeze), g_kernel, gb.sum(axis=(0, 1, 2))

    return make_result(_unbatch(out, squeeze), (x, kernel, bias), backward)


def relu(x) -> Tensor:
    x = as_tensor(x)
    positive = x.data > 0
    out = np.where(positive, x.data, 0).astype(x.dtype, copy=False)
    return make_result(out, (x,), lambda g: (g * positive,))


def add_n(inputs: Sequence) -> Tensor:
    """Elementwise sum of two or more same-shape tensors."""
    inputs = [as_tensor(t) for t in inputs]
    if len(inputs) < 2:
        raise ShapeError(f"add_n needs at least 2 inputs, got {len(inputs)}")
    ref = inputs[0].shape
    for t in inputs[1:]:
        if t.shape != ref:
            raise ShapeError("add_n operands differ in shape", ref, t.shape)
    out = inputs[0].data.copy()
    for t in inputs[1:]:
        out = out + t.data
    return make_result(out, inputs, lambda g: [g] * len(inputs))


def interpolation_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Linear-interpolation weights (n_out, n_in) under align-corners mapping.

    Output sample ``i`` sits at input coordinate ``i * (n_in - 1) / (n_out - 1)``
    and blends its two bracketing input samples.
    """
    if n_in < 1 or n_out < 1:
        raise ShapeError("interpolation extents must be positive", (n_in,), (n_out,))
    mat = np.zeros((n_out, n_in))
    if n_in == 1:
        mat[:, 0] = 1.0
        return mat
    if n_out == 1:
        mat[0, 0] = 1.0
        return mat
    pos = np.arange(n_out) * (n_in - 1) / (n_out - 1)
    lo = np.minimum(np.floor(pos).astype(int), n_in - 2)
    frac = pos - lo
    rows = np.arange(n_out)
    mat[rows, lo] = 1.0 - frac
    mat[rows, lo + 1] += frac
    return mat


def bilinear_resize(x, target: tuple[int, int]) -> Tensor:
    """Resize the two spatial axes by bilinear interpolation (align corners)."""
    x = as_tensor(x)
    xb, squeeze = _batched(x.data)
    t_h, t_w = (int(t) for t in target)
    a_h = interpolation_matrix(xb.shape[1], t_h).astype(xb.dtype)
    a_w = interpolation_matrix(xb.shape[2], t_w).astype(xb.dtype)
    # (n, H, w, c) then (n, H, W, c)
    out = np.einsum("Hh,nhwc->nHwc", a_h, xb)
    out = np.einsum("Ww,nHwc->nHWc", a_w, out)

    def backward(g):
        gb = g[None] if squeeze else g
        gx = np.einsum("Ww,nHWc->nHwc", a_w, gb)
        gx = np.einsum("Hh,nHwc->nhwc", a_h, gx)
        return (_unbatch(gx, squeeze),)

    return make_result(_unbatch(out, squeeze), (x,), backward)


def mse_loss(prediction, label) -> Tensor:
    """Mean of squared elementwise differences, as a scalar tensor."""
    prediction, label = as_tensor(prediction), as_tensor(label)
    if prediction.shape != label.shape:
        raise ShapeError("mse_loss operands differ in shape", prediction.shape, label.shape)
    diff = prediction.data - label.data
    count = diff.size
    value = np.asarray(np.mean(diff * diff))

    def backward(g):
        scale = 2.0 * g / count
        return scale * diff, -scale * diff

    return make_result(value, (prediction, label), backward)
