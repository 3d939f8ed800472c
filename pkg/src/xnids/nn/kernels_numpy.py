"""Pure-numpy reference kernels for 1-D convolution and max-pooling.

Layout is channels-last throughout: activations (N, L, C), convolution
weights (kernel_width, in_channels, filters). Convolution is plain
cross-correlation; pooling is valid (no padding), dropping any remainder
window.
"""

from __future__ import annotations

import numpy as np


def _window_index(length_out: int, width: int, stride: int) -> np.ndarray:
    # idx[t, j] = t * stride + j
    return (np.arange(length_out) * stride)[:, None] + np.arange(width)[None, :]


def conv1d_forward(xp: np.ndarray, weights: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    """Cross-correlate a padded batch (N, Lp, C) with (k, C, F) weights.

    im2col + one GEMM: the gathered windows flatten to (N*Lo, k*C) and
    multiply the (k*C, F) weight matrix.
    """
    n, _, c = xp.shape
    k, _, f = weights.shape
    length_out = (xp.shape[1] - k) // stride + 1
    idx = _window_index(length_out, k, stride)
    cols = xp[:, idx, :]  # (N, Lo, k, C)
    out = cols.reshape(n * length_out, k * c) @ weights.reshape(k * c, f)
    out += bias[None, :]
    return out.reshape(n, length_out, f)


def conv1d_backward(
    xp: np.ndarray, weights: np.ndarray, dout: np.ndarray, stride: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients w.r.t. padded input, weights, and bias."""
    n, _, c = xp.shape
    k, _, f = weights.shape
    length_out = dout.shape[1]
    idx = _window_index(length_out, k, stride)
    cols = xp[:, idx, :].reshape(n * length_out, k * c)
    dz = dout.reshape(n * length_out, f)
    dw = (cols.T @ dz).reshape(k, c, f)
    dcols = (dz @ weights.reshape(k * c, f).T).reshape(n, length_out, k, c)
    dxp = np.zeros_like(xp)
    for j in range(k):
        span = slice(j, j + (length_out - 1) * stride + 1, stride)
        dxp[:, span, :] += dcols[:, :, j, :]
    db = dout.sum(axis=(0, 1))
    return dxp, dw, db


def maxpool1d_forward(x: np.ndarray, window: int, stride: int) -> tuple[np.ndarray, np.ndarray]:
    """Valid max-pooling over (N, L, C); returns output and in-window argmax."""
    length_out = (x.shape[1] - window) // stride + 1
    idx = _window_index(length_out, window, stride)
    windows = x[:, idx, :]  # (N, Lo, w, C)
    arg = windows.argmax(axis=2).astype(np.int64)
    out = np.take_along_axis(windows, arg[:, :, None, :], axis=2)[:, :, 0, :]
    return out, arg


def maxpool1d_backward(dout: np.ndarray, arg: np.ndarray, length_in: int, window: int, stride: int) -> np.ndarray:
    n, length_out, channels = dout.shape
    dx = np.zeros((n, length_in, channels), dtype=dout.dtype)
    rows = np.arange(n)[:, None, None]
    cols = np.arange(channels)[None, None, :]
    positions = (np.arange(length_out) * stride)[None, :, None] + arg
    np.add.at(dx, (rows, positions, cols), dout)
    return dx
