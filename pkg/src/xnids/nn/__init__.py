"""Minimal dense/convolutional/recurrent network engine with exact
backpropagation and Adam, sized for small tabular classifiers.

Hot kernels (1-D convolution and max-pooling) have two interchangeable
implementations: numba-jitted loops and a pure-numpy fallback. Selection is
driven by the ``XNIDS_BACKEND`` environment variable ("numba" or "numpy");
see :mod:`xnids.nn.backend`.
"""

from .layers import Conv1D, Dense, Dropout, Flatten, LSTMLayer, MaxPool1D, Softmax
from .model import (
    ModelSpec,
    NonFiniteActivation,
    ShapeMismatch,
    backward,
    cnn_reference_spec,
    forward,
    init_params,
    lstm_reference_spec,
    predict_class,
    predict_proba,
)
from .losses import InvalidTarget, cross_entropy
from .adam import AdamState, adam_update
from .train import NonFiniteLoss, TrainConfig, TrainHistory, train
from .io import load_model_bundle, save_model_bundle

__all__ = [
    "Conv1D",
    "Dense",
    "Dropout",
    "Flatten",
    "LSTMLayer",
    "MaxPool1D",
    "Softmax",
    "ModelSpec",
    "NonFiniteActivation",
    "ShapeMismatch",
    "backward",
    "cnn_reference_spec",
    "forward",
    "init_params",
    "lstm_reference_spec",
    "predict_class",
    "predict_proba",
    "InvalidTarget",
    "cross_entropy",
    "AdamState",
    "adam_update",
    "NonFiniteLoss",
    "TrainConfig",
    "TrainHistory",
    "train",
    "load_model_bundle",
    "save_model_bundle",
]
