"""One-hidden-layer perceptron trained by online back-propagation.

Every unit is a logistic sigmoid. For each training instance the squared
error ``0.5 * sum((d - y)**2)`` over the two one-hot outputs is reduced by
one gradient step of size ``learning_rate``. Instance order is reshuffled
every epoch from the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numba
import numpy as np

from ..dataset import Dataset
from ..seeding import make_rng
from .base import MODEL_FORMAT, ClassifierError, ConfigError, check_inputs, check_training_set
from .scaling import MinMaxScaler

N_OUTPUTS = 2
INIT_RANGE = 0.5


@dataclass(frozen=True)
class MLP:
    name: ClassVar[str] = "mlp"
    hidden: int | None = None
    learning_rate: float = 0.3
    epochs: int = 500

    def __post_init__(self):
        if self.hidden is not None and self.hidden < 1:
            raise ConfigError("mlp hidden must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigError("mlp learning_rate must be > 0")
        if self.epochs < 1:
            raise ConfigError("mlp epochs must be >= 1")

    def fit(self, train: Dataset, seed: int = 0) -> MlpModel:
        return mlp_fit_backprop(train, self.hidden, self.learning_rate, self.epochs, seed)

    def params(self) -> dict:
        return {"hidden": self.hidden, "learning_rate": self.learning_rate, "epochs": self.epochs}


def default_hidden(n_inputs: int) -> int:
    return math.ceil((n_inputs + N_OUTPUTS) / 2)


@numba.njit(cache=True)
def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


@numba.njit(cache=True)
def _forward(W1, W2, x, h, o):
    n_in, n_hid = x.size, W1.shape[1]
    for k in range(n_hid):
        z = W1[n_in, k]
        for i in range(n_in):
            z += W1[i, k] * x[i]
        h[k] = _sigmoid(z)
    for m in range(W2.shape[1]):
        z = W2[n_hid, m]
        for k in range(n_hid):
            z += W2[k, m] * h[k]
        o[m] = _sigmoid(z)


@numba.njit(cache=True)
def _backprop(W1, W2, x, d, gW1, gW2, h, o, delta_o):
    """Write the gradient of the instance error into gW1/gW2 and return that error."""
    _forward(W1, W2, x, h, o)
    n_in, n_hid, n_out = x.size, W1.shape[1], W2.shape[1]
    err = 0.0
    for m in range(n_out):
        e = d[m] - o[m]
        err += 0.5 * e * e
        delta_o[m] = -e * o[m] * (1.0 - o[m])
    for k in range(n_hid):
        back = 0.0
        for m in range(n_out):
            gW2[k, m] = delta_o[m] * h[k]
            back += W2[k, m] * delta_o[m]
        delta_h = back * h[k] * (1.0 - h[k])
        for i in range(n_in):
            gW1[i, k] = delta_h * x[i]
        gW1[n_in, k] = delta_h
    for m in range(n_out):
        gW2[n_hid, m] = delta_o[m]
    return err


@numba.njit(cache=True)
def _train(W1, W2, X, D, orders, lr, epoch_errors):
    n_in, n_hid, n_out = X.shape[1], W1.shape[1], W2.shape[1]
    gW1 = np.zeros_like(W1)
    gW2 = np.zeros_like(W2)
    h = np.zeros(n_hid)
    o = np.zeros(n_out)
    delta_o = np.zeros(n_out)
    for ep in range(orders.shape[0]):
        total = 0.0
        for r in range(orders.shape[1]):
            n = orders[ep, r]
            total += _backprop(W1, W2, X[n], D[n], gW1, gW2, h, o, delta_o)
            for a in range(n_in + 1):
                for k in range(n_hid):
                    W1[a, k] -= lr * gW1[a, k]
            for k in range(n_hid + 1):
                for m in range(n_out):
                    W2[k, m] -= lr * gW2[k, m]
        epoch_errors[ep] = total
        if not (np.isfinite(W1).all() and np.isfinite(W2).all()):
            return ep
    return -1


def instance_gradient(W1, W2, x, d) -> tuple[np.ndarray, np.ndarray, float]:
    """Back-propagated gradient of one instance's squared error, plus that error."""
    W1 = np.ascontiguousarray(W1, dtype=float)
    W2 = np.ascontiguousarray(W2, dtype=float)
    gW1, gW2 = np.zeros_like(W1), np.zeros_like(W2)
    err = _backprop(W1, W2, np.asarray(x, float), np.asarray(d, float), gW1, gW2,
                    np.zeros(W1.shape[1]), np.zeros(W2.shape[1]), np.zeros(W2.shape[1]))
    return gW1, gW2, err


def forward(W1, W2, Z) -> np.ndarray:
    """Output activations for scaled inputs ``Z``, shape ``(n, 2)``."""
    H = 1.0 / (1.0 + np.exp(-(Z @ W1[:-1] + W1[-1])))
    return 1.0 / (1.0 + np.exp(-(H @ W2[:-1] + W2[-1])))


def init_weights(n_in: int, hidden: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    W1 = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(n_in + 1, hidden))
    W2 = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(hidden + 1, N_OUTPUTS))
    return W1, W2


@dataclass(frozen=True, eq=False)
class MlpModel:
    scaler: MinMaxScaler
    W1: np.ndarray  # (inputs + 1) x hidden, bias row last
    W2: np.ndarray  # (hidden + 1) x 2, bias row last
    learning_rate: float
    epochs: int
    epoch_errors: np.ndarray

    @property
    def n_features(self) -> int:
        return self.W1.shape[0] - 1

    def outputs(self, X) -> np.ndarray:
        X = check_inputs(X, self.n_features)
        return forward(self.W1, self.W2, self.scaler.transform(X))

    def predict(self, X) -> np.ndarray:
        out = self.outputs(X)
        # output columns are (negative, positive); ties go negative
        return (out[:, 1] > out[:, 0]).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "kind": "mlp",
            "scaler": self.scaler.to_dict(),
            "W1": self.W1.tolist(),
            "W2": self.W2.tolist(),
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "epoch_errors": self.epoch_errors.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> MlpModel:
        return cls(
            MinMaxScaler.from_dict(data["scaler"]),
            np.asarray(data["W1"], dtype=float),
            np.asarray(data["W2"], dtype=float),
            float(data["learning_rate"]),
            int(data["epochs"]),
            np.asarray(data["epoch_errors"], dtype=float),
        )


def mlp_fit_backprop(
    train: Dataset,
    hidden: int | None = None,
    learning_rate: float = 0.3,
    epochs: int = 500,
    seed: int = 0,
) -> MlpModel:
    """Train on min-max scaled inputs with one-hot targets (negative, positive).

    ``learning_rate=0`` is accepted here and leaves the initial weights untouched.
    """
    check_training_set(train)
    if hidden is not None and hidden < 1 or epochs < 1 or not learning_rate >= 0:
        raise ConfigError("mlp needs hidden >= 1, epochs >= 1 and learning_rate >= 0")
    scaler = MinMaxScaler.fit(train.X)
    Z = np.ascontiguousarray(scaler.transform(train.X))
    D = np.zeros((len(train), N_OUTPUTS))
    D[np.arange(len(train)), train.y.astype(np.intp)] = 1.0
    hidden = hidden or default_hidden(train.n_features)
    rng = make_rng(seed)
    W1, W2 = init_weights(train.n_features, hidden, rng)
    orders = np.stack([rng.permutation(len(train)) for _ in range(epochs)])
    errors = np.zeros(epochs)
    bad_epoch = _train(W1, W2, Z, D, orders, float(learning_rate), errors)
    if bad_epoch >= 0:
        raise ClassifierError(f"non-finite weights after epoch {bad_epoch + 1}")
    return MlpModel(scaler, W1, W2, float(learning_rate), epochs, errors)
