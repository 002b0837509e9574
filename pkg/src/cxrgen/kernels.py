"""Hot numeric kernels: 3x3 same-padding convolution and 2x2 max pooling.

Two interchangeable backends produce identical results:

  * numba @njit loops (default when numba imports cleanly), and
  * vectorized pure-numpy fallbacks.

Set CXR_NO_NUMBA=1 to force the numpy path (useful on platforms where
numba is unavailable and for benchmarking; see `python -m cxrgen.benchmark`).
"""

from __future__ import annotations

import os

import numpy as np

# ---------------------------------------------------------------- numpy path


def conv2d_forward_numpy(x, kernels, bias):
    """x [C,H,W], kernels [F,C,3,3], bias [F] -> out [F,H,W] (stride 1, pad 1)."""
    c, h, w = x.shape
    f = kernels.shape[0]
    xp = np.zeros((c, h + 2, w + 2), dtype=np.float64)
    xp[:, 1 : h + 1, 1 : w + 1] = x
    out = np.broadcast_to(bias[:, np.newaxis, np.newaxis], (f, h, w)).copy()
    for dy in range(3):
        for dx in range(3):
            out += np.tensordot(kernels[:, :, dy, dx], xp[:, dy : dy + h, dx : dx + w], axes=1)
    return out


def conv2d_backward_numpy(x, kernels, grad_out):
    """Gradients of conv2d_forward w.r.t. input, kernels and bias."""
    c, h, w = x.shape
    f = kernels.shape[0]
    xp = np.zeros((c, h + 2, w + 2), dtype=np.float64)
    xp[:, 1 : h + 1, 1 : w + 1] = x
    grad_k = np.empty_like(kernels)
    grad_xp = np.zeros_like(xp)
    for dy in range(3):
        for dx in range(3):
            window = xp[:, dy : dy + h, dx : dx + w]
            grad_k[:, :, dy, dx] = np.tensordot(grad_out, window, axes=([1, 2], [1, 2]))
            grad_xp[:, dy : dy + h, dx : dx + w] += np.tensordot(
                kernels[:, :, dy, dx].T, grad_out, axes=1
            )
    grad_b = grad_out.sum(axis=(1, 2))
    return grad_xp[:, 1 : h + 1, 1 : w + 1], grad_k, grad_b


def maxpool2_forward_numpy(x):
    """x [C,H,W], H and W even -> (out [C,H/2,W/2], argmax [C,H/2,W/2]).

    argmax is the row-major index (0..3) within each 2x2 window; np.argmax
    picks the first maximum, giving the first-index tie-break.
    """
    c, h, w = x.shape
    windows = (
        x.reshape(c, h // 2, 2, w // 2, 2)
        .transpose(0, 1, 3, 2, 4)
        .reshape(c, h // 2, w // 2, 4)
    )
    arg = windows.argmax(axis=-1).astype(np.uint8)
    out = np.take_along_axis(windows, arg[..., np.newaxis].astype(np.intp), axis=-1)[..., 0]
    return out, arg


def maxpool2_backward_numpy(arg, grad_out):
    """Scatter grad_out back to the argmax positions of each window."""
    c, oh, ow = grad_out.shape
    grad_windows = np.zeros((c, oh, ow, 4), dtype=np.float64)
    np.put_along_axis(grad_windows, arg[..., np.newaxis].astype(np.intp), grad_out[..., np.newaxis], axis=-1)
    return (
        grad_windows.reshape(c, oh, ow, 2, 2)
        .transpose(0, 1, 3, 2, 4)
        .reshape(c, oh * 2, ow * 2)
    )


# ---------------------------------------------------------------- numba path

USE_NUMBA = os.environ.get("CXR_NO_NUMBA", "") not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:
        USE_NUMBA = False

if USE_NUMBA:

    @njit(cache=True)
    def conv2d_forward_numba(x, kernels, bias):
        c, h, w = x.shape
        f = kernels.shape[0]
        out = np.empty((f, h, w), dtype=np.float64)
        for fi in range(f):
            for y in range(h):
                for xx in range(w):
                    acc = bias[fi]
                    for ci in range(c):
                        for dy in range(3):
                            sy = y + dy - 1
                            if sy < 0 or sy >= h:
                                continue
                            for dx in range(3):
                                sx = xx + dx - 1
                                if 0 <= sx < w:
                                    acc += x[ci, sy, sx] * kernels[fi, ci, dy, dx]
                    out[fi, y, xx] = acc
        return out

    @njit(cache=True)
    def conv2d_backward_numba(x, kernels, grad_out):
        c, h, w = x.shape
        f = kernels.shape[0]
        grad_x = np.zeros((c, h, w), dtype=np.float64)
        grad_k = np.zeros_like(kernels)
        grad_b = np.zeros(f, dtype=np.float64)
        for fi in range(f):
            for y in range(h):
                for xx in range(w):
                    g = grad_out[fi, y, xx]
                    grad_b[fi] += g
                    for ci in range(c):
                        for dy in range(3):
                            sy = y + dy - 1
                            if sy < 0 or sy >= h:
                                continue
                            for dx in range(3):
                                sx = xx + dx - 1
                                if 0 <= sx < w:
                                    grad_k[fi, ci, dy, dx] += g * x[ci, sy, sx]
                                    grad_x[ci, sy, sx] += g * kernels[fi, ci, dy, dx]
        return grad_x, grad_k, grad_b

    @njit(cache=True)
    def maxpool2_forward_numba(x):
        c, h, w = x.shape
        oh, ow = h // 2, w // 2
        out = np.empty((c, oh, ow), dtype=np.float64)
        arg = np.empty((c, oh, ow), dtype=np.uint8)
        for ci in range(c):
            for y in range(oh):
                for xx in range(ow):
                    best = x[ci, 2 * y, 2 * xx]
                    besti = 0
                    i = 0
                    for dy in range(2):
                        for dx in range(2):
                            v = x[ci, 2 * y + dy, 2 * xx + dx]
                            if v > best:  # strict: first index wins ties
                                best = v
                                besti = i
                            i += 1
                    out[ci, y, xx] = best
                    arg[ci, y, xx] = besti
        return out, arg

    @njit(cache=True)
    def maxpool2_backward_numba(arg, grad_out):
        c, oh, ow = grad_out.shape
        grad_x = np.zeros((c, oh * 2, ow * 2), dtype=np.float64)
        for ci in range(c):
            for y in range(oh):
                for xx in range(ow):
                    i = arg[ci, y, xx]
                    grad_x[ci, 2 * y + i // 2, 2 * xx + i % 2] = grad_out[ci, y, xx]
        return grad_x

    conv2d_forward = conv2d_forward_numba
    conv2d_backward = conv2d_backward_numba
    maxpool2_forward = maxpool2_forward_numba
    maxpool2_backward = maxpool2_backward_numba
else:
    conv2d_forward = conv2d_forward_numpy
    conv2d_backward = conv2d_backward_numpy
    maxpool2_forward = maxpool2_forward_numpy
    maxpool2_backward = maxpool2_backward_numpy
