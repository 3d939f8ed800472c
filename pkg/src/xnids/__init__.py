"""Explainable network-intrusion-detection toolkit.

Trains small CNN and LSTM classifiers on NSL-KDD connection records,
attributes per-class predictions to input features with Shapley values,
and ships the survey instruments + analytics used to evaluate analyst
trust in the resulting explanations.
"""

__version__ = "0.1.0"
