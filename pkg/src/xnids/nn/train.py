"""Mini-batch training loop: seeded shuffling, Adam steps, per-epoch history."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .adam import AdamState, adam_update
from .layers import init_layer_params, output_shape
from .losses import cross_entropy, onehot_encode
from .model import ModelSpec, Params, backward, forward


class NonFiniteLoss(FloatingPointError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-3
    loss: str = "sparse_ce"  # "sparse_ce" | "categorical_ce" (same value, different target encoding)
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.loss not in ("sparse_ce", "categorical_ce"):
            raise ValueError(f"unknown loss {self.loss!r}")


@dataclass
class TrainHistory:
    epoch_loss: list[float] = field(default_factory=list)
    epoch_accuracy: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)


def train(
    spec: ModelSpec,
    x: np.ndarray,
    y: np.ndarray,
    config: TrainConfig,
    progress=None,
) -> tuple[Params, TrainHistory]:
    """Train from a fresh initialization; bit-reproducible under a fixed seed.

    The last partial batch is trained on. Raises :class:`NonFiniteLoss` with
    epoch/batch coordinates if the loss leaves the reals.
    """
    if x.shape[0] == 0:
        raise ValueError("training set is empty")
    seeds = np.random.SeedSequence(config.seed).spawn(2)
    params = _init_from_seedseq(spec, seeds[0])
    rng = np.random.Generator(np.random.PCG64(seeds[1]))
    state = AdamState.for_params(params)

    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = x.shape[0]
    history = TrainHistory()

    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        total_loss = 0.0
        total_correct = 0
        for start in range(0, n, config.batch_size):
            batch_idx = order[start : start + config.batch_size]
            xb = x[batch_idx]
            yb = y[batch_idx]
            probs, caches = forward(spec, params, xb, mode="train", rng=rng, return_cache=True)
            targets = onehot_encode(yb, spec.output_classes) if config.loss == "categorical_ce" else yb
            loss = cross_entropy(probs, targets)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became non-finite at epoch {epoch}, batch {start // config.batch_size}")
            grads = backward(spec, params, caches, probs, yb)
            adam_update(params, grads, state, config.learning_rate, config.beta1, config.beta2, config.eps)
            total_loss += loss * len(batch_idx)
            total_correct += int(np.sum(np.argmax(probs, axis=1) == yb))
        history.epoch_loss.append(total_loss / n)
        history.epoch_accuracy.append(total_correct / n)
        history.epoch_seconds.append(time.perf_counter() - t0)
        if progress is not None:
            progress(epoch, history)
    return params, history


def _init_from_seedseq(spec: ModelSpec, seedseq: np.random.SeedSequence) -> Params:
    rng = np.random.Generator(np.random.PCG64(seedseq))
    params: Params = []
    shape = spec.input_shape
    for layer in spec.layers:
        params.append(init_layer_params(layer, shape, rng))
        shape = output_shape(layer, shape)
    return params
