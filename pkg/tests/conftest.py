"""Shared fixtures and oracle helpers."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

DATA_DIR = Path(os.environ.get("XNIDS_DATA_DIR", "data"))


def nslkdd_train_file() -> Path | None:
    """Real benchmark file, if the user has placed it under the data dir."""
    candidate = DATA_DIR / "KDDTrain+.txt"
    return candidate if candidate.exists() else None


requires_nslkdd = pytest.mark.skipif(
    nslkdd_train_file() is None,
    reason="KDDTrain+.txt not present (set XNIDS_DATA_DIR or place it under ./data); "
    "this environment has no route to fetch it",
)


@dataclass(frozen=True)
class Stack:
    """Duck-typed stand-in for ModelSpec: lets layer-level tests compose
    arbitrary stacks without the family depth constraints."""

    layers: tuple
    input_shape: tuple
    output_classes: int = 5


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def finite_difference_gradcheck(spec, params, x, y, grads, h=1e-5, samples_per_tensor=12, seed=0):
    """Max relative error between analytic grads and central differences of
    the inference-mode loss, probing a random subset of each tensor.

    The denominator floor of 1e-6 reflects the oracle's own resolution:
    central differences at h=1e-5 in float64 carry ~1e-11 absolute noise, so
    coordinates whose gradient sits below ~1e-6 are effectively compared
    absolutely against that noise floor.
    """
    from xnids.nn import cross_entropy, forward

    def loss():
        return cross_entropy(forward(spec, params, x, mode="infer"), y)

    probe_rng = np.random.default_rng(seed)
    max_rel = 0.0
    for layer_index, layer_grads in enumerate(grads):
        for key, g in layer_grads.items():
            flat = params[layer_index][key].ravel()
            gflat = g.ravel()
            count = min(samples_per_tensor, flat.size)
            for i in probe_rng.choice(flat.size, size=count, replace=False):
                orig = flat[i]
                flat[i] = orig + h
                loss_plus = loss()
                flat[i] = orig - h
                loss_minus = loss()
                flat[i] = orig
                fd = (loss_plus - loss_minus) / (2 * h)
                rel = abs(fd - gflat[i]) / max(abs(fd), abs(gflat[i]), 1e-6)
                max_rel = max(max_rel, rel)
    return max_rel
