"""Soft-margin SVM with a polynomial kernel, trained by sequential minimal optimization.

Each step picks the maximal violating pair of multipliers, solves the
two-variable subproblem analytically and updates the cached gradient.
Training stops once the largest KKT violation gap drops to ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from ..dataset import Dataset
from .base import MODEL_FORMAT, ConfigError, ConvergenceError, check_inputs, check_training_set
from .scaling import MinMaxScaler

_TAU = 1e-12


def poly_kernel(U: np.ndarray, V: np.ndarray, degree: int) -> np.ndarray:
    return (U @ V.T + 1.0) ** degree


@dataclass(frozen=True)
class SVM:
    name: ClassVar[str] = "svm"
    C: float = 1.0
    degree: int = 2
    tol: float = 1e-3
    max_iter: int = 1_000_000

    def __post_init__(self):
        if not self.C > 0:
            raise ConfigError("svm C must be > 0")
        if self.degree < 1:
            raise ConfigError("svm degree must be >= 1")
        if not self.tol > 0:
            raise ConfigError("svm tol must be > 0")
        if self.max_iter < 1:
            raise ConfigError("svm max_iter must be >= 1")

    def fit(self, train: Dataset, seed: int = 0) -> SvmModel:
        return svm_fit_smo(train, self.C, self.degree, self.tol, seed, self.max_iter)

    def params(self) -> dict:
        return {"C": self.C, "degree": self.degree, "tol": self.tol, "max_iter": self.max_iter}


@dataclass(frozen=True, eq=False)
class SvmModel:
    scaler: MinMaxScaler
    support_vectors: np.ndarray  # scaled
    support_labels: np.ndarray  # +1 / -1
    alpha: np.ndarray
    b: float
    degree: int
    C: float
    support_index: np.ndarray  # row numbers in the training set
    iterations: int

    @property
    def n_features(self) -> int:
        return self.scaler.lo.size

    def decision_scaled(self, Z: np.ndarray) -> np.ndarray:
        if self.alpha.size == 0:
            return np.full(Z.shape[0], self.b)
        K = poly_kernel(Z, self.support_vectors, self.degree)
        return K @ (self.alpha * self.support_labels) + self.b

    def decision_function(self, X) -> np.ndarray:
        X = check_inputs(X, self.n_features)
        return self.decision_scaled(self.scaler.transform(X))

    def predict(self, X) -> np.ndarray:
        # f == 0 goes to the negative class
        return (self.decision_function(X) > 0).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "kind": "svm",
            "scaler": self.scaler.to_dict(),
            "support_vectors": self.support_vectors.tolist(),
            "support_labels": self.support_labels.tolist(),
            "alpha": self.alpha.tolist(),
            "b": self.b,
            "degree": self.degree,
            "C": self.C,
            "support_index": self.support_index.tolist(),
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, data: dict) -> SvmModel:
        n_features = len(data["scaler"]["min"])
        return cls(
            MinMaxScaler.from_dict(data["scaler"]),
            np.asarray(data["support_vectors"], dtype=float).reshape(-1, n_features),
            np.asarray(data["support_labels"], dtype=float),
            np.asarray(data["alpha"], dtype=float),
            float(data["b"]),
            int(data["degree"]),
            float(data["C"]),
            np.asarray(data["support_index"], dtype=np.intp),
            int(data["iterations"]),
        )


def smo(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iter: int) -> tuple[np.ndarray, float, int]:
    """Solve the SVM dual for a precomputed kernel matrix.

    Returns ``(alpha, b, iterations)`` with ``f(x_i) = sum_j alpha_j y_j K_ij + b``.
    """
    n = y.size
    alpha = np.zeros(n)
    g = np.zeros(n)  # sum_j alpha_j y_j K_ij
    diag = np.diag(K)
    pos = y > 0
    it = 0
    while True:
        at_lower = alpha <= 0.0
        at_upper = alpha >= C
        up = (pos & ~at_upper) | (~pos & ~at_lower)
        low = (pos & ~at_lower) | (~pos & ~at_upper)
        # b_i: the bias that would put point i exactly on its margin
        b_i = y - g
        i = int(np.argmax(np.where(up, b_i, -np.inf)))
        j = int(np.argmin(np.where(low, b_i, np.inf)))
        gap = b_i[i] - b_i[j]
        if gap <= tol:
            break
        if it >= max_iter:
            raise ConvergenceError(f"SMO did not reach tolerance {tol} (gap {gap:.3g})", it)
        it += 1

        yi, yj = y[i], y[j]
        ai, aj = alpha[i], alpha[j]
        if yi != yj:
            lo, hi = max(0.0, aj - ai), min(C, C + aj - ai)
        else:
            lo, hi = max(0.0, ai + aj - C), min(C, ai + aj)
        eta = max(diag[i] + diag[j] - 2.0 * K[i, j], _TAU)
        # errors E_k = f(x_k) - y_k without the bias, which cancels in E_i - E_j
        aj_new = aj + yj * ((g[i] - yi) - (g[j] - yj)) / eta
        aj_new = min(max(aj_new, lo), hi)
        ai_new = ai + yi * yj * (aj - aj_new)
        # snap onto the box so bound checks stay exact
        ai_new = 0.0 if ai_new < 1e-12 * C else (C if ai_new > C * (1 - 1e-12) else ai_new)
        aj_new = 0.0 if aj_new < 1e-12 * C else (C if aj_new > C * (1 - 1e-12) else aj_new)
        di, dj = ai_new - ai, aj_new - aj
        if di == 0.0 and dj == 0.0:
            raise ConvergenceError("SMO step made no progress", it)
        alpha[i], alpha[j] = ai_new, aj_new
        g += di * yi * K[:, i] + dj * yj * K[:, j]

    free = (alpha > 0.0) & (alpha < C)
    if free.any():
        b = float(np.mean((y - g)[free]))
    else:
        b = float((b_i[i] + b_i[j]) / 2.0)
    return alpha, b, it


def svm_fit_smo(
    train: Dataset,
    C: float = 1.0,
    degree: int = 2,
    tol: float = 1e-3,
    seed: int = 0,
    max_iter: int = 1_000_000,
) -> SvmModel:
    """Fit a polynomial-kernel SVM, ``K(u, v) = (u.v + 1)**degree``, on min-max scaled inputs.

    Working-pair selection is deterministic, so ``seed`` does not change the
    result; it is accepted for a uniform fit signature.
    """
    check_training_set(train)
    SVM(C, degree, tol, max_iter)  # validates
    scaler = MinMaxScaler.fit(train.X)
    Z = scaler.transform(train.X)
    y = np.where(train.y == 1, 1.0, -1.0)
    K = poly_kernel(Z, Z, degree)
    alpha, b, it = smo(K, y, C, tol, max_iter)
    if not (np.isfinite(alpha).all() and np.isfinite(b)):
        raise ConvergenceError("non-finite multipliers", it)
    sv = np.flatnonzero(alpha > 0.0)
    return SvmModel(scaler, Z[sv], y[sv], alpha[sv], b, degree, C, sv, it)
