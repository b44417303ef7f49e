import numpy as np
import pytest

from cadfs.classifiers import MLP, fit
from cadfs.classifiers.base import ConfigError
from cadfs.classifiers.mlp import default_hidden, init_weights, instance_gradient, mlp_fit_backprop
from cadfs.seeding import make_rng

from .conftest import make_dataset
from .oracles import mlp_error, mlp_gradient_check

AND_X = [[0, 0], [0, 1], [1, 0], [1, 1]]
AND_Y = [0, 0, 0, 1]


@pytest.mark.parametrize("seed", range(10))
def test_gradient_matches_central_differences(seed):
    assert mlp_gradient_check(np.random.default_rng(seed)) <= 1e-4


def test_instance_error_value():
    rng = np.random.default_rng(0)
    W1, W2 = init_weights(3, 2, rng)
    x, d = rng.random(3), np.array([0.0, 1.0])
    assert instance_gradient(W1, W2, x, d)[2] == pytest.approx(mlp_error(W1, W2, x, d), abs=1e-14)


def test_zero_learning_rate_keeps_initial_weights():
    d = make_dataset(AND_X, AND_Y)
    model = mlp_fit_backprop(d, hidden=2, learning_rate=0.0, epochs=20, seed=4)
    W1, W2 = init_weights(2, 2, make_rng(4))
    assert np.array_equal(model.W1, W1)
    assert np.array_equal(model.W2, W2)


def test_and_function():
    d = make_dataset(AND_X, AND_Y)
    model = mlp_fit_backprop(d, hidden=2, learning_rate=0.3, epochs=500, seed=0)
    assert np.array_equal(model.predict(d.X), d.y)


@pytest.mark.parametrize("seed", range(5))
def test_error_decreases_on_separable_data(seed):
    rng = np.random.default_rng(seed)
    X = rng.random((30, 3))
    y = (X[:, 0] > 0.5).astype(int)
    y[:2] = [0, 1]
    model = mlp_fit_backprop(make_dataset(X, y), epochs=100, seed=seed)
    assert model.epoch_errors[-1] <= model.epoch_errors[0]


def test_architecture():
    rng = np.random.default_rng(0)
    d = make_dataset(rng.random((10, 13)), [0, 1] * 5)
    model = fit(MLP(epochs=2), d)
    assert default_hidden(13) == 8
    assert model.W1.shape == (14, 8)
    assert model.W2.shape == (9, 2)
    W1, W2 = init_weights(13, 8, np.random.default_rng(1))
    assert np.abs(W1).max() <= 0.5 and np.abs(W2).max() <= 0.5


def test_seed_changes_model():
    d = make_dataset(AND_X, AND_Y)
    a = mlp_fit_backprop(d, epochs=5, seed=1)
    b = mlp_fit_backprop(d, epochs=5, seed=2)
    assert not np.array_equal(a.W1, b.W1)


def test_invalid_config():
    for bad in ({"hidden": 0}, {"learning_rate": 0.0}, {"epochs": 0}):
        with pytest.raises(ConfigError):
            MLP(**bad)
    with pytest.raises(ConfigError):
        mlp_fit_backprop(make_dataset(AND_X, AND_Y), learning_rate=-0.1)
