"""Model assembly: layer-structured specs, parameter init, full forward and
backward passes, and the two reference architectures (a 3-conv-layer CNN and
a 3-layer stacked LSTM, both ending in a 5-way softmax)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .layers import (
    BACKWARD,
    FORWARD,
    Conv1D,
    Dense,
    Dropout,
    Flatten,
    LSTMLayer,
    MaxPool1D,
    ShapeMismatch,
    Softmax,
    init_layer_params,
    output_shape,
)

LayerSpec = Conv1D | MaxPool1D | Dense | LSTMLayer | Dropout | Flatten | Softmax

N_CLASSES = 5


class NonFiniteActivation(FloatingPointError):
    def __init__(self, layer_index: int, layer: LayerSpec):
        super().__init__(f"non-finite activation after layer {layer_index} ({type(layer).__name__})")
        self.layer_index = layer_index


class MissingCache(Exception):
    pass


@dataclass(frozen=True)
class ModelSpec:
    family: str  # "cnn" | "lstm"
    layers: tuple[LayerSpec, ...]
    input_shape: tuple[int, ...]  # per-sample, e.g. (41, 1) or (1, 41)
    output_classes: int = N_CLASSES

    def __post_init__(self):
        if self.family not in ("cnn", "lstm"):
            raise ValueError(f"family must be 'cnn' or 'lstm', got {self.family!r}")
        if not self.layers or not isinstance(self.layers[-1], Softmax):
            raise ValueError("model must end in a Softmax layer")
        dense_before = [l for l in self.layers if isinstance(l, Dense)]
        if not dense_before or dense_before[-1].units != self.output_classes:
            raise ValueError(f"final Dense layer must produce {self.output_classes} logits")
        n_conv = sum(isinstance(l, Conv1D) for l in self.layers)
        n_lstm = sum(isinstance(l, LSTMLayer) for l in self.layers)
        if self.family == "cnn" and n_conv != 3:
            raise ValueError(f"cnn family requires exactly 3 Conv1D layers, found {n_conv}")
        if self.family == "lstm" and n_lstm != 3:
            raise ValueError(f"lstm family requires exactly 3 LSTM layers, found {n_lstm}")

    @property
    def input_layout(self) -> str:
        return self.family


def cnn_reference_spec(input_length: int = 41) -> ModelSpec:
    """Conv(64) -> pool -> Conv(128) -> pool -> Conv(64) -> Dense(64) -> Dense(5)."""
    return ModelSpec(
        family="cnn",
        layers=(
            Conv1D(64, kernel_width=3, padding="same", activation="relu"),
            MaxPool1D(2),
            Conv1D(128, kernel_width=3, padding="same", activation="relu"),
            MaxPool1D(2),
            Conv1D(64, kernel_width=3, padding="same", activation="relu"),
            Flatten(),
            Dense(64, activation="relu"),
            Dense(N_CLASSES, activation="linear"),
            Softmax(),
        ),
        input_shape=(input_length, 1),
    )


def lstm_reference_spec(n_features: int = 41, dropout_rate: float = 0.3) -> ModelSpec:
    """Three stacked 64-unit recurrent layers, dropout 0.3 after each."""
    return ModelSpec(
        family="lstm",
        layers=(
            LSTMLayer(64, return_sequences=True),
            Dropout(dropout_rate),
            LSTMLayer(64, return_sequences=True),
            Dropout(dropout_rate),
            LSTMLayer(64, return_sequences=False),
            Dropout(dropout_rate),
            Dense(N_CLASSES, activation="linear"),
            Softmax(),
        ),
        input_shape=(1, n_features),
    )


Params = list[dict[str, np.ndarray]]


def init_params(spec: ModelSpec, seed: int = 0) -> Params:
    rng = np.random.Generator(np.random.PCG64(seed))
    params: Params = []
    shape = spec.input_shape
    for layer in spec.layers:
        params.append(init_layer_params(layer, shape, rng))
        shape = output_shape(layer, shape)
    if shape != (spec.output_classes,):
        raise ShapeMismatch(f"model output shape {shape} != ({spec.output_classes},)")
    return params


def forward(
    spec: ModelSpec,
    params: Params,
    x: np.ndarray,
    mode: str = "infer",
    rng: np.random.Generator | None = None,
    return_cache: bool = False,
):
    """Run the whole stack; returns class probabilities (N, 5).

    In train mode dropout is live and per-layer caches are kept for
    :func:`backward`. Activations are checked finite after every layer.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    if x.ndim != len(spec.input_shape) + 1 or x.shape[1:] != spec.input_shape:
        raise ShapeMismatch(f"input shape {x.shape[1:]} does not match spec {spec.input_shape}")
    out = x
    caches = []
    for i, layer in enumerate(spec.layers):
        out, cache = FORWARD[type(layer)](layer, params[i], out, mode, rng)
        # A float64 sum is nan or +-inf whenever any element is non-finite.
        if not np.isfinite(out.sum(dtype=np.float64)):
            raise NonFiniteActivation(i, layer)
        caches.append(cache)
    if return_cache:
        return out, caches
    return out


def backward(spec: ModelSpec, params: Params, caches: list, probs: np.ndarray, targets: np.ndarray):
    """Exact gradients of the mean cross-entropy loss w.r.t. every parameter.

    The softmax/cross-entropy pair is differentiated jointly: the gradient
    w.r.t. the logits is (probs - onehot) / N.
    """
    if caches is None or len(caches) != len(spec.layers):
        raise MissingCache("backward requires the cache list from a train-mode forward pass")
    n = probs.shape[0]
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), np.asarray(targets, dtype=np.int64)] = 1.0
    grad = (probs - onehot) / n

    grads: Params = [dict() for _ in spec.layers]
    for i in range(len(spec.layers) - 1, -1, -1):
        layer = spec.layers[i]
        if isinstance(layer, Softmax):
            continue  # fused into the logit gradient above
        grad, layer_grads = BACKWARD[type(layer)](layer, params[i], caches[i], grad)
        grads[i] = layer_grads
    return grads


def predict_proba(spec: ModelSpec, params: Params, x: np.ndarray, chunk_size: int = 8192) -> np.ndarray:
    """Inference-mode probabilities, computed in chunks to bound memory."""
    outputs = []
    for start in range(0, x.shape[0], chunk_size):
        outputs.append(forward(spec, params, x[start : start + chunk_size], mode="infer"))
    return np.concatenate(outputs, axis=0) if outputs else np.empty((0, spec.output_classes))


def predict_class(spec: ModelSpec, params: Params, x: np.ndarray) -> np.ndarray:
    """Argmax labels; ties resolve to the lowest class index."""
    return np.argmax(predict_proba(spec, params, x), axis=1)


# ---------------------------------------------------------------------------
# Spec (de)serialization for the on-disk bundle

_LAYER_TYPES = {
    "conv1d": Conv1D,
    "maxpool1d": MaxPool1D,
    "dense": Dense,
    "lstm": LSTMLayer,
    "dropout": Dropout,
    "flatten": Flatten,
    "softmax": Softmax,
}
_TYPE_NAMES = {v: k for k, v in _LAYER_TYPES.items()}


def spec_to_jsonable(spec: ModelSpec) -> dict:
    return {
        "family": spec.family,
        "input_shape": list(spec.input_shape),
        "output_classes": spec.output_classes,
        "layers": [{"type": _TYPE_NAMES[type(l)], **asdict(l)} for l in spec.layers],
    }


def spec_from_jsonable(obj: dict) -> ModelSpec:
    layers = []
    for entry in obj["layers"]:
        entry = dict(entry)
        cls = _LAYER_TYPES[entry.pop("type")]
        layers.append(cls(**entry))
    return ModelSpec(
        family=obj["family"],
        layers=tuple(layers),
        input_shape=tuple(obj["input_shape"]),
        output_classes=obj["output_classes"],
    )
