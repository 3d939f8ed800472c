"""Numba-jitted kernels, same surface as :mod:`xnids.nn.kernels_numpy`.

Loops are ordered so the innermost index walks the contiguous filter axis,
and parallel reductions are arranged to stay deterministic (weight gradients
parallelize over the kernel/channel plane, never over samples).
Compilation is cached on disk, so the first call per process pays the JIT
cost once.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True, fastmath=False)
def _conv1d_forward(xp, weights, bias, stride, out):
    n, lp, cin = xp.shape
    k, _, f = weights.shape
    lo = out.shape[1]
    for i in prange(n):
        for t in range(lo):
            base = t * stride
            row = out[i, t]
            for ff in range(f):
                row[ff] = bias[ff]
            for j in range(k):
                for c in range(cin):
                    v = xp[i, base + j, c]
                    w = weights[j, c]
                    for ff in range(f):
                        row[ff] += v * w[ff]


def conv1d_forward(xp: np.ndarray, weights: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    k = weights.shape[0]
    length_out = (xp.shape[1] - k) // stride + 1
    out = np.empty((xp.shape[0], length_out, weights.shape[2]), dtype=xp.dtype)
    _conv1d_forward(xp, weights, bias, stride, out)
    return out


@njit(cache=True, parallel=True, fastmath=False)
def _conv1d_backward_dx(weights, dout, stride, dxp):
    n, lo, f = dout.shape
    k, cin, _ = weights.shape
    for i in prange(n):
        for t in range(lo):
            base = t * stride
            d = dout[i, t]
            for j in range(k):
                for c in range(cin):
                    w = weights[j, c]
                    acc = 0.0
                    for ff in range(f):
                        acc += d[ff] * w[ff]
                    dxp[i, base + j, c] += acc


@njit(cache=True, parallel=True, fastmath=False)
def _conv1d_backward_dw(xp, dout, stride, k, dw):
    n, lo, f = dout.shape
    cin = xp.shape[2]
    for jc in prange(k * cin):
        j = jc // cin
        c = jc % cin
        acc = dw[j, c]
        for i in range(n):
            for t in range(lo):
                v = xp[i, t * stride + j, c]
                d = dout[i, t]
                for ff in range(f):
                    acc[ff] += v * d[ff]


def conv1d_backward(
    xp: np.ndarray, weights: np.ndarray, dout: np.ndarray, stride: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    dxp = np.zeros_like(xp)
    _conv1d_backward_dx(weights, dout, stride, dxp)
    dw = np.zeros_like(weights)
    _conv1d_backward_dw(xp, dout, stride, weights.shape[0], dw)
    db = dout.sum(axis=(0, 1))
    return dxp, dw, db


@njit(cache=True, parallel=True, fastmath=False)
def _maxpool1d_forward(x, window, stride, out, arg):
    n, lo, c = out.shape
    for i in prange(n):
        for t in range(lo):
            base = t * stride
            for ch in range(c):
                best = x[i, base, ch]
                best_j = 0
                for j in range(1, window):
                    v = x[i, base + j, ch]
                    if v > best:
                        best = v
                        best_j = j
                out[i, t, ch] = best
                arg[i, t, ch] = best_j


def maxpool1d_forward(x: np.ndarray, window: int, stride: int) -> tuple[np.ndarray, np.ndarray]:
    length_out = (x.shape[1] - window) // stride + 1
    out = np.empty((x.shape[0], length_out, x.shape[2]), dtype=x.dtype)
    arg = np.empty((x.shape[0], length_out, x.shape[2]), dtype=np.int64)
    _maxpool1d_forward(x, window, stride, out, arg)
    return out, arg


@njit(cache=True, parallel=True, fastmath=False)
def _maxpool1d_backward(dout, arg, stride, dx):
    n, lo, c = dout.shape
    for i in prange(n):
        for t in range(lo):
            base = t * stride
            for ch in range(c):
                dx[i, base + arg[i, t, ch], ch] += dout[i, t, ch]


def maxpool1d_backward(dout: np.ndarray, arg: np.ndarray, length_in: int, window: int, stride: int) -> np.ndarray:
    dx = np.zeros((dout.shape[0], length_in, dout.shape[2]), dtype=dout.dtype)
    _maxpool1d_backward(dout, arg, stride, dx)
    return dx
