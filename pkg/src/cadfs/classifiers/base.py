from __future__ import annotations

import numpy as np

from ..dataset import Dataset

MODEL_FORMAT = "cadfs-model/1"


class ClassifierError(RuntimeError):
    """Training or prediction failed."""


class ConfigError(ValueError):
    """Classifier hyperparameters violate their constraints."""


class ConvergenceError(ClassifierError):
    def __init__(self, message: str, iterations: int):
        self.iterations = iterations
        super().__init__(f"{message} (after {iterations} iterations)")


def check_training_set(train: Dataset) -> None:
    if len(train) == 0:
        raise ClassifierError("empty training set")
    if train.has_missing():
        raise ClassifierError("training set contains missing cells; impute first")
    neg, pos = train.class_counts()
    if neg == 0 or pos == 0:
        raise ClassifierError("degenerate training set: only one class present")


def check_inputs(X, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ClassifierError(f"model expects {n_features} features, got input of shape {X.shape}")
    if np.isnan(X).any():
        raise ClassifierError("input contains missing cells")
    return X
