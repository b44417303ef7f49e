"""Naive Bayes for mixed categorical/continuous features.

Categorical conditionals use add-one smoothing, continuous ones a Gaussian
density per class. Scores are computed in the log domain and the evidence
term P(B) is left out since it is shared by both classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from ..dataset import Dataset
from .base import MODEL_FORMAT, ClassifierError, check_inputs, check_training_set

VARIANCE_FLOOR = 1e-9
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class NaiveBayes:
    name: ClassVar[str] = "nb"

    def fit(self, train: Dataset, seed: int = 0) -> NaiveBayesModel:
        return fit_naive_bayes(train)

    def params(self) -> dict:
        return {}


@dataclass(frozen=True, eq=False)
class NaiveBayesModel:
    """Fitted tables; class axis is ordered (negative, positive).

    ``tables[j]`` is a ``(2, arity)`` conditional probability table for a
    categorical feature and ``None`` for a continuous one, whose Gaussian
    parameters live in ``mean[:, j]`` / ``var[:, j]``.
    """

    arities: tuple[int | None, ...]
    prior: np.ndarray
    tables: tuple[np.ndarray | None, ...]
    mean: np.ndarray
    var: np.ndarray
    _cat: list = field(init=False, repr=False)
    _cont: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cat = [(j, np.log(t)) for j, t in enumerate(self.tables) if t is not None]
        cont = np.array([j for j, a in enumerate(self.arities) if a is None], dtype=np.intp)
        object.__setattr__(self, "_cat", cat)
        object.__setattr__(self, "_cont", cont)

    @property
    def n_features(self) -> int:
        return len(self.arities)

    def log_scores(self, X) -> np.ndarray:
        """Unnormalized log posteriors, shape ``(n, 2)``."""
        X = check_inputs(X, self.n_features)
        scores = np.tile(np.log(self.prior), (X.shape[0], 1))
        for j, log_table in self._cat:
            codes = X[:, j].astype(np.intp)
            if codes.min() < 0 or codes.max() >= log_table.shape[1]:
                raise ClassifierError(f"feature {j}: category code outside the training arity")
            scores += log_table[:, codes].T
        if self._cont.size:
            xc = X[:, self._cont][:, None, :]
            mu = self.mean[:, self._cont][None, :, :]
            var = self.var[:, self._cont][None, :, :]
            scores += (-0.5 * (_LOG_2PI + np.log(var) + (xc - mu) ** 2 / var)).sum(axis=2)
        return scores

    def posterior(self, X) -> np.ndarray:
        s = self.log_scores(X)
        s = s - s.max(axis=1, keepdims=True)
        p = np.exp(s)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        s = self.log_scores(X)
        # ties go to the negative class
        return (s[:, 1] > s[:, 0]).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "kind": "nb",
            "arities": list(self.arities),
            "prior": self.prior.tolist(),
            "tables": [None if t is None else t.tolist() for t in self.tables],
            "mean": np.nan_to_num(self.mean).tolist(),
            "var": np.nan_to_num(self.var, nan=1.0).tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> NaiveBayesModel:
        arities = tuple(data["arities"])
        return cls(
            arities,
            np.asarray(data["prior"], dtype=float),
            tuple(None if t is None else np.asarray(t, dtype=float) for t in data["tables"]),
            np.asarray(data["mean"], dtype=float),
            np.asarray(data["var"], dtype=float),
        )


def fit_naive_bayes(train: Dataset) -> NaiveBayesModel:
    check_training_set(train)
    X, y = train.X, train.y.astype(np.intp)
    n_class = np.bincount(y, minlength=2)
    prior = n_class / n_class.sum()
    p = train.n_features
    mean = np.zeros((2, p))
    var = np.ones((2, p))
    tables: list[np.ndarray | None] = []
    for j, arity in enumerate(train.schema.arities):
        col = X[:, j]
        if arity is not None:
            counts = np.bincount(col.astype(np.intp) + arity * y, minlength=2 * arity).reshape(2, arity)
            tables.append((counts + 1.0) / (n_class[:, None] + arity))
        else:
            tables.append(None)
            for c in (0, 1):
                vals = col[y == c]
                mean[c, j] = vals.mean()
                var[c, j] = max(vals.var(), VARIANCE_FLOOR)
    if not (np.isfinite(mean).all() and np.isfinite(var).all()):
        raise ClassifierError("non-finite Gaussian parameters")
    return NaiveBayesModel(train.schema.arities, prior, tuple(tables), mean, var)


def nb_posterior(model: NaiveBayesModel, instance) -> np.ndarray:
    """Class posterior ``(P(negative|x), P(positive|x))`` for one instance."""
    return model.posterior(np.asarray(instance, dtype=float).reshape(1, -1))[0]
