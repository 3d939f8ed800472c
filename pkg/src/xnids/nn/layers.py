"""Layer specs and their forward/backward rules.

Every layer exposes ``forward(spec, params, x, mode, rng) -> (out, cache)``
and ``backward(spec, params, cache, dout) -> (dx, grads)`` through the
dispatch tables at the bottom. Convolution and pooling inner loops are
delegated to the active kernel backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels


class ShapeMismatch(Exception):
    pass


# ---------------------------------------------------------------------------
# Activations

def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def apply_activation(name: str, z: np.ndarray, inplace: bool = False) -> np.ndarray:
    # inplace is only safe when z is not needed afterwards (inference mode).
    if name == "relu":
        return np.maximum(z, 0.0, out=z) if inplace else np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z, out=z) if inplace else np.tanh(z)
    if name == "sigmoid":
        return _sigmoid(z)
    if name == "linear":
        return z
    raise ValueError(f"unknown activation {name!r}")


def activation_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """d activation / d pre-activation, given both z and a = act(z)."""
    if name == "relu":
        return (z > 0.0).astype(z.dtype)
    if name == "tanh":
        return 1.0 - a * a
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "linear":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {name!r}")


# ---------------------------------------------------------------------------
# Layer specs


@dataclass(frozen=True)
class Conv1D:
    filters: int
    kernel_width: int = 3
    stride: int = 1
    padding: str = "same"  # "same" | "valid"
    activation: str = "relu"

    def __post_init__(self):
        if self.filters < 1:
            raise ValueError("filters must be >= 1")
        if self.padding not in ("same", "valid"):
            raise ValueError(f"padding must be 'same' or 'valid', got {self.padding!r}")


@dataclass(frozen=True)
class MaxPool1D:
    window: int = 2
    stride: int | None = None  # defaults to window

    @property
    def effective_stride(self) -> int:
        return self.window if self.stride is None else self.stride


@dataclass(frozen=True)
class Dense:
    units: int
    activation: str = "linear"

    def __post_init__(self):
        if self.units < 1:
            raise ValueError("units must be >= 1")


@dataclass(frozen=True)
class LSTMLayer:
    hidden_units: int
    return_sequences: bool = False

    def __post_init__(self):
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be >= 1")


@dataclass(frozen=True)
class Dropout:
    rate: float

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ValueError("rate must lie in [0, 1)")


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class Softmax:
    pass


LSTM_GATES = ("i", "f", "o", "c")


# ---------------------------------------------------------------------------
# Parameter initialization (uniform Glorot-style fan scaling)


def _glorot(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_layer_params(spec, in_shape: tuple[int, ...], rng: np.random.Generator) -> dict[str, np.ndarray]:
    if isinstance(spec, Conv1D):
        _, c_in = in_shape
        fan_in = spec.kernel_width * c_in
        fan_out = spec.kernel_width * spec.filters
        return {
            "W": _glorot(rng, (spec.kernel_width, c_in, spec.filters), fan_in, fan_out),
            "b": np.zeros(spec.filters),
        }
    if isinstance(spec, Dense):
        (n_in,) = in_shape
        return {
            "W": _glorot(rng, (n_in, spec.units), n_in, spec.units),
            "b": np.zeros(spec.units),
        }
    if isinstance(spec, LSTMLayer):
        _, n_in = in_shape
        h = spec.hidden_units
        params: dict[str, np.ndarray] = {}
        for g in LSTM_GATES:
            params[f"W_{g}"] = _glorot(rng, (n_in, h), n_in, h)
            params[f"U_{g}"] = _glorot(rng, (h, h), h, h)
            params[f"b_{g}"] = np.zeros(h)
        params["b_f"] = np.ones(h)  # open forget gate at step 0
        return params
    return {}


def output_shape(spec, in_shape: tuple[int, ...]) -> tuple[int, ...]:
    """Per-sample shape propagation, batch dimension excluded."""
    if isinstance(spec, Conv1D):
        length, _ = in_shape
        if spec.padding == "same":
            length_out = -(-length // spec.stride)  # ceil
        else:
            length_out = (length - spec.kernel_width) // spec.stride + 1
        if length_out < 1:
            raise ShapeMismatch(f"conv over length {length} yields empty output")
        return (length_out, spec.filters)
    if isinstance(spec, MaxPool1D):
        length, channels = in_shape
        length_out = (length - spec.window) // spec.effective_stride + 1
        if length_out < 1:
            raise ShapeMismatch(f"pool over length {length} yields empty output")
        return (length_out, channels)
    if isinstance(spec, Dense):
        return (spec.units,)
    if isinstance(spec, LSTMLayer):
        t, _ = in_shape
        return (t, spec.hidden_units) if spec.return_sequences else (spec.hidden_units,)
    if isinstance(spec, Flatten):
        return (int(np.prod(in_shape)),)
    return in_shape  # Dropout, Softmax preserve shape


def _same_padding(length: int, k: int, stride: int) -> tuple[int, int]:
    length_out = -(-length // stride)
    pad_total = max(0, (length_out - 1) * stride + k - length)
    left = pad_total // 2
    return left, pad_total - left


# ---------------------------------------------------------------------------
# Forward / backward per layer type


def _pad_length(x: np.ndarray, left: int, right: int) -> np.ndarray:
    n, length, c = x.shape
    out = np.zeros((n, left + length + right, c), dtype=x.dtype)
    out[:, left : left + length, :] = x
    return out


def _conv_forward(spec: Conv1D, params, x, mode, rng):
    if x.ndim != 3:
        raise ShapeMismatch(f"Conv1D expects (N, L, C), got {x.shape}")
    if spec.padding == "same":
        left, right = _same_padding(x.shape[1], spec.kernel_width, spec.stride)
        xp = _pad_length(x, left, right) if (left or right) else x
    else:
        left = 0
        xp = x
    if spec.kernel_width > xp.shape[1]:
        raise ShapeMismatch(f"kernel width {spec.kernel_width} exceeds padded length {xp.shape[1]}")
    z = kernels().conv1d_forward(xp, params["W"], params["b"], spec.stride)
    if mode == "infer":
        a = apply_activation(spec.activation, z, inplace=True)
        return a, {}
    a = apply_activation(spec.activation, z)
    return a, {"xp": xp, "z": z, "a": a, "pad_left": left, "in_length": x.shape[1]}


def _conv_backward(spec: Conv1D, params, cache, dout):
    dz = dout * activation_grad(spec.activation, cache["z"], cache["a"])
    dxp, dw, db = kernels().conv1d_backward(cache["xp"], params["W"], dz, spec.stride)
    left = cache["pad_left"]
    dx = dxp[:, left : left + cache["in_length"], :]
    return dx, {"W": dw, "b": db}


def _pool_forward(spec: MaxPool1D, params, x, mode, rng):
    if x.ndim != 3:
        raise ShapeMismatch(f"MaxPool1D expects (N, L, C), got {x.shape}")
    out, arg = kernels().maxpool1d_forward(x, spec.window, spec.effective_stride)
    return out, {"arg": arg, "in_length": x.shape[1]}


def _pool_backward(spec: MaxPool1D, params, cache, dout):
    dx = kernels().maxpool1d_backward(dout, cache["arg"], cache["in_length"], spec.window, spec.effective_stride)
    return dx, {}


def _dense_forward(spec: Dense, params, x, mode, rng):
    if x.ndim != 2:
        raise ShapeMismatch(f"Dense expects (N, features), got {x.shape}")
    z = x @ params["W"] + params["b"]
    if mode == "infer":
        return apply_activation(spec.activation, z, inplace=True), {}
    a = apply_activation(spec.activation, z)
    return a, {"x": x, "z": z, "a": a}


def _dense_backward(spec: Dense, params, cache, dout):
    dz = dout * activation_grad(spec.activation, cache["z"], cache["a"])
    dw = cache["x"].T @ dz
    db = dz.sum(axis=0)
    dx = dz @ params["W"].T
    return dx, {"W": dw, "b": db}


def lstm_step(x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray, params: dict[str, np.ndarray]):
    """One recurrence step; returns (h, c, gate cache).

    i = sigmoid(x W_i + h U_i + b_i), f and o likewise, g = tanh(x W_c + h U_c + b_c);
    c' = f*c + i*g; h' = o * tanh(c').
    """
    i = _sigmoid(x_t @ params["W_i"] + h_prev @ params["U_i"] + params["b_i"])
    f = _sigmoid(x_t @ params["W_f"] + h_prev @ params["U_f"] + params["b_f"])
    o = _sigmoid(x_t @ params["W_o"] + h_prev @ params["U_o"] + params["b_o"])
    g = np.tanh(x_t @ params["W_c"] + h_prev @ params["U_c"] + params["b_c"])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, {"i": i, "f": f, "o": o, "g": g, "c": c, "tc": tc, "x": x_t, "h_prev": h_prev, "c_prev": c_prev}


def _lstm_forward(spec: LSTMLayer, params, x, mode, rng):
    if x.ndim != 3:
        raise ShapeMismatch(f"LSTM expects (N, T, F), got {x.shape}")
    n, t_steps, _ = x.shape
    h = np.zeros((n, spec.hidden_units), dtype=x.dtype)
    c = np.zeros((n, spec.hidden_units), dtype=x.dtype)
    steps = []
    hs = np.empty((n, t_steps, spec.hidden_units), dtype=x.dtype)
    for t in range(t_steps):
        h, c, step_cache = lstm_step(x[:, t, :], h, c, params)
        hs[:, t, :] = h
        steps.append(step_cache)
    out = hs if spec.return_sequences else h
    return out, {"steps": steps, "n": n, "t_steps": t_steps}


def _lstm_backward(spec: LSTMLayer, params, cache, dout):
    steps = cache["steps"]
    n, t_steps = cache["n"], cache["t_steps"]
    h_units = spec.hidden_units
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    dx = np.empty((n, t_steps, steps[0]["x"].shape[1]), dtype=dout.dtype)
    dh_next = np.zeros((n, h_units), dtype=dout.dtype)
    dc_next = np.zeros((n, h_units), dtype=dout.dtype)
    for t in reversed(range(t_steps)):
        s = steps[t]
        dh = dh_next + (dout[:, t, :] if spec.return_sequences else 0.0)
        if not spec.return_sequences and t == t_steps - 1:
            dh = dh + dout
        do = dh * s["tc"]
        dc = dc_next + dh * s["o"] * (1.0 - s["tc"] ** 2)
        df = dc * s["c_prev"]
        di = dc * s["g"]
        dg = dc * s["i"]
        dc_next = dc * s["f"]
        da = {
            "i": di * s["i"] * (1.0 - s["i"]),
            "f": df * s["f"] * (1.0 - s["f"]),
            "o": do * s["o"] * (1.0 - s["o"]),
            "c": dg * (1.0 - s["g"] ** 2),
        }
        dx_t = np.zeros_like(s["x"])
        dh_next = np.zeros((n, h_units), dtype=dout.dtype)
        for g in LSTM_GATES:
            grads[f"W_{g}"] += s["x"].T @ da[g]
            grads[f"U_{g}"] += s["h_prev"].T @ da[g]
            grads[f"b_{g}"] += da[g].sum(axis=0)
            dx_t += da[g] @ params[f"W_{g}"].T
            dh_next += da[g] @ params[f"U_{g}"].T
        dx[:, t, :] = dx_t
    return dx, grads


def _dropout_forward(spec: Dropout, params, x, mode, rng):
    if mode != "train" or spec.rate == 0.0:
        return x, {"mask": None}
    if rng is None:
        raise ValueError("train-mode dropout needs an rng")
    # Inverted dropout: surviving units scaled so inference needs no rescale.
    mask = (rng.random(x.shape) >= spec.rate) / (1.0 - spec.rate)
    return x * mask, {"mask": mask}


def _dropout_backward(spec: Dropout, params, cache, dout):
    mask = cache["mask"]
    return (dout if mask is None else dout * mask), {}


def _flatten_forward(spec: Flatten, params, x, mode, rng):
    return x.reshape(x.shape[0], -1), {"shape": x.shape}


def _flatten_backward(spec: Flatten, params, cache, dout):
    return dout.reshape(cache["shape"]), {}


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _softmax_forward(spec: Softmax, params, x, mode, rng):
    if x.ndim != 2:
        raise ShapeMismatch(f"Softmax expects (N, classes), got {x.shape}")
    return softmax(x), {}


def _softmax_backward(spec: Softmax, params, cache, dout):
    # Softmax gradient is fused with cross-entropy at the loss boundary;
    # reaching here means the graph head was not Softmax+CE.
    raise NotImplementedError("softmax backward is fused with the cross-entropy loss")


FORWARD = {
    Conv1D: _conv_forward,
    MaxPool1D: _pool_forward,
    Dense: _dense_forward,
    LSTMLayer: _lstm_forward,
    Dropout: _dropout_forward,
    Flatten: _flatten_forward,
    Softmax: _softmax_forward,
}

BACKWARD = {
    Conv1D: _conv_backward,
    MaxPool1D: _pool_backward,
    Dense: _dense_backward,
    LSTMLayer: _lstm_backward,
    Dropout: _dropout_backward,
    Flatten: _flatten_backward,
    Softmax: _softmax_backward,
}
