"""From-scratch classifiers behind a common ``fit`` / ``predict`` contract.

A *kind* (``NaiveBayes``, ``C45``, ``SVM``, ``MLP``) holds hyperparameters;
``kind.fit(train, seed)`` returns an immutable fitted model with a
vectorized ``predict(X)``.
"""

from __future__ import annotations

import json
from typing import Union

import numpy as np

from ..dataset import Dataset
from .base import MODEL_FORMAT, ClassifierError, ConfigError, ConvergenceError, check_training_set
from .c45 import C45, C45Model, c45_prune, gain_ratio
from .mlp import MLP, MlpModel, mlp_fit_backprop
from .naive_bayes import NaiveBayes, NaiveBayesModel, nb_posterior
from .svm import SVM, SvmModel, svm_fit_smo

ClassifierKind = Union[NaiveBayes, C45, SVM, MLP]
TrainedModel = Union[NaiveBayesModel, C45Model, SvmModel, MlpModel]

KINDS = {"nb": NaiveBayes, "c45": C45, "svm": SVM, "mlp": MLP}
_MODELS = {"nb": NaiveBayesModel, "c45": C45Model, "svm": SvmModel, "mlp": MlpModel}

# column labels used in benchmark reports
DISPLAY_NAMES = {"nb": "BN", "svm": "SVM", "mlp": "MLP", "c45": "C4.5"}


def make_kind(name: str, **params) -> ClassifierKind:
    try:
        cls = KINDS[name]
    except KeyError:
        raise ConfigError(f"unknown classifier {name!r}; choose from {sorted(KINDS)}") from None
    return cls(**params)


def fit(kind: ClassifierKind, train: Dataset, seed: int = 0) -> TrainedModel:
    check_training_set(train)
    return kind.fit(train, seed)


def predict(model: TrainedModel, instance) -> int:
    """Label (1 positive, 0 negative) for a single instance."""
    x = np.asarray(instance, dtype=float)
    if x.ndim != 1:
        raise ClassifierError("predict expects a single instance; use model.predict for batches")
    return int(model.predict(x[None, :])[0])


def model_to_json(model: TrainedModel) -> str:
    return json.dumps(model.to_dict(), sort_keys=True)


def model_from_json(text: str) -> TrainedModel:
    data = json.loads(text)
    if data.get("format") != MODEL_FORMAT:
        raise ClassifierError(f"unsupported model format {data.get('format')!r}")
    return _MODELS[data["kind"]].from_dict(data)


__all__ = [
    "C45", "MLP", "SVM", "NaiveBayes", "C45Model", "MlpModel", "SvmModel", "NaiveBayesModel",
    "ClassifierKind", "TrainedModel", "ClassifierError", "ConfigError", "ConvergenceError",
    "KINDS", "DISPLAY_NAMES", "make_kind", "fit", "predict", "model_to_json", "model_from_json",
    "gain_ratio", "c45_prune", "svm_fit_smo", "mlp_fit_backprop", "nb_posterior",
]
