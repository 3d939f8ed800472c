"""Benchmark the numba-jitted kernels against the pure-numpy fallback.

Runs the convolution and pooling kernels at training-shaped (batch 64) and
inference-shaped (batch 4096) sizes matching the reference CNN's layers,
in float64 (training dtype) and float32 (explanation-sweep dtype), and a
whole-model forward/backward comparison. Matmul-bound layers (dense, the
recurrent cells) go through BLAS in both backends and are not listed
separately.

Usage: python benchmarks/bench_kernels.py [--reps 30]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from xnids.nn import kernels_numpy

try:
    from xnids.nn import kernels_numba

    HAS_NUMBA = True
except ImportError:
    kernels_numba = None
    HAS_NUMBA = False

# (label, batch, length_padded, channels_in, kernel, filters)
CONV_SHAPES = [
    ("conv1 train", 64, 43, 1, 3, 64),
    ("conv2 train", 64, 22, 64, 3, 128),
    ("conv3 train", 64, 12, 128, 3, 64),
    ("conv1 infer", 4096, 43, 1, 3, 64),
    ("conv2 infer", 4096, 22, 64, 3, 128),
    ("conv3 infer", 4096, 12, 128, 3, 64),
]


def time_call(fn, reps):
    fn()  # warm (and JIT-compile on the numba side)
    start = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - start) / reps


def bench_conv(mod, shape, dtype, reps):
    _, n, length, c, k, f = shape
    rng = np.random.default_rng(0)
    xp = rng.standard_normal((n, length, c)).astype(dtype)
    w = rng.standard_normal((k, c, f)).astype(dtype)
    b = np.zeros(f, dtype=dtype)
    out = mod.conv1d_forward(xp, w, b, 1)
    dout = np.ones_like(out)
    forward = time_call(lambda: mod.conv1d_forward(xp, w, b, 1), reps)
    backward = time_call(lambda: mod.conv1d_backward(xp, w, dout, 1), reps)
    return forward, backward


def bench_pool(mod, n, length, c, reps):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((n, length, c))
    out, arg = mod.maxpool1d_forward(x, 2, 2)
    dout = np.ones_like(out)
    forward = time_call(lambda: mod.maxpool1d_forward(x, 2, 2), reps)
    backward = time_call(lambda: mod.maxpool1d_backward(dout, arg, length, 2, 2), reps)
    return forward, backward


def bench_model(backend_name, reps):
    import os

    os.environ["XNIDS_BACKEND"] = backend_name
    from xnids.nn import backward, forward, init_params
    from xnids.nn.model import cnn_reference_spec

    spec = cnn_reference_spec()
    params = init_params(spec, seed=0)
    rng = np.random.default_rng(0)
    x = rng.random((64, 41, 1))
    y = rng.integers(0, 5, 64)

    def step():
        probs, caches = forward(spec, params, x, mode="train", rng=rng, return_cache=True)
        backward(spec, params, caches, probs, y)

    return time_call(step, reps)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=30)
    args = parser.parse_args()

    if not HAS_NUMBA:
        print("numba not importable; only the numpy fallback is available")

    print(f"{'kernel':<14} {'dtype':<8} {'numpy fwd':>10} {'numpy bwd':>10}", end="")
    if HAS_NUMBA:
        print(f" {'numba fwd':>10} {'numba bwd':>10} {'fwd speedup':>12}")
    else:
        print()

    for shape in CONV_SHAPES:
        for dtype in (np.float64, np.float32):
            np_f, np_b = bench_conv(kernels_numpy, shape, dtype, args.reps)
            row = f"{shape[0]:<14} {np.dtype(dtype).name:<8} {np_f * 1e3:>9.2f}m {np_b * 1e3:>9.2f}m"
            if HAS_NUMBA:
                nb_f, nb_b = bench_conv(kernels_numba, shape, dtype, args.reps)
                row += f" {nb_f * 1e3:>9.2f}m {nb_b * 1e3:>9.2f}m {np_f / nb_f:>11.2f}x"
            print(row)

    for (n, length, c) in [(64, 41, 64), (4096, 41, 64)]:
        np_f, np_b = bench_pool(kernels_numpy, n, length, c, args.reps)
        row = f"{'pool n=' + str(n):<14} {'float64':<8} {np_f * 1e3:>9.2f}m {np_b * 1e3:>9.2f}m"
        if HAS_NUMBA:
            nb_f, nb_b = bench_pool(kernels_numba, n, length, c, args.reps)
            row += f" {nb_f * 1e3:>9.2f}m {nb_b * 1e3:>9.2f}m {np_f / nb_f:>11.2f}x"
        print(row)

    print()
    numpy_step = bench_model("numpy", max(5, args.reps // 3))
    print(f"reference CNN train step (batch 64): numpy {numpy_step * 1e3:.1f} ms", end="")
    if HAS_NUMBA:
        numba_step = bench_model("numba", max(5, args.reps // 3))
        print(f", numba {numba_step * 1e3:.1f} ms, speedup {numpy_step / numba_step:.2f}x")
    else:
        print()


if __name__ == "__main__":
    main()
