"""Adam with bias correction, operating on the layer-list parameter layout."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    m: list[dict[str, np.ndarray]] = field(default_factory=list)
    v: list[dict[str, np.ndarray]] = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_params(cls, params: list[dict[str, np.ndarray]]) -> "AdamState":
        return cls(
            m=[{k: np.zeros_like(p) for k, p in layer.items()} for layer in params],
            v=[{k: np.zeros_like(p) for k, p in layer.items()} for layer in params],
            t=0,
        )


def adam_update(
    params: list[dict[str, np.ndarray]],
    grads: list[dict[str, np.ndarray]],
    state: AdamState,
    learning_rate: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One in-place step: m and v track first/second gradient moments, the
    bias-corrected ratio scales the update."""
    if len(grads) != len(params):
        raise ValueError(f"{len(grads)} gradient groups for {len(params)} parameter groups")
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    for layer_p, layer_g, layer_m, layer_v in zip(params, grads, state.m, state.v):
        for key, g in layer_g.items():
            if layer_p[key].shape != g.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {layer_p[key].shape} for {key}")
            m = layer_m[key]
            v = layer_v[key]
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * np.square(g)
            layer_p[key] -= learning_rate * (m / bc1) / (np.sqrt(v / bc2) + eps)
