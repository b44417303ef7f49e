from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class MinMaxScaler:
    """Min-max scaling to [0, 1] with statistics from training data only.

    Test values outside the training range are clamped; constant columns map to 0.
    """

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> MinMaxScaler:
        return cls(X.min(axis=0).astype(float), X.max(axis=0).astype(float))

    def transform(self, X: np.ndarray) -> np.ndarray:
        span = self.hi - self.lo
        safe = np.where(span > 0, span, 1.0)
        Z = np.where(span > 0, (X - self.lo) / safe, 0.0)
        return np.clip(Z, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"min": self.lo.tolist(), "max": self.hi.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> MinMaxScaler:
        return cls(np.asarray(data["min"], dtype=float), np.asarray(data["max"], dtype=float))
