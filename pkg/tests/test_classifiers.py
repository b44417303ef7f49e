"""Behaviour shared by every classifier kind."""

import json

import numpy as np
import pytest

from cadfs.classifiers import DISPLAY_NAMES, KINDS, fit, make_kind, model_from_json, model_to_json, predict
from cadfs.classifiers.base import ClassifierError, ConfigError
from cadfs.dataset import impute_missing

from .conftest import make_dataset

FAST = {"mlp": {"epochs": 30}}


@pytest.fixture(scope="module")
def train(cleveland):
    return impute_missing(cleveland)


@pytest.fixture(params=sorted(KINDS))
def kind(request):
    return make_kind(request.param, **FAST.get(request.param, {}))


def test_display_names_cover_kinds():
    assert set(DISPLAY_NAMES) == set(KINDS)


def test_fit_is_deterministic(kind, train):
    a, b = fit(kind, train, seed=9), fit(kind, train, seed=9)
    assert model_to_json(a) == model_to_json(b)
    assert np.array_equal(a.predict(train.X), b.predict(train.X))


def test_json_round_trip(kind, train):
    model = fit(kind, train, seed=1)
    text = model_to_json(model)
    data = json.loads(text)
    assert data["kind"] == kind.name and data["format"] == "cadfs-model/1"
    again = model_from_json(text)
    assert model_to_json(again) == text
    assert np.array_equal(again.predict(train.X), model.predict(train.X))


def test_predict_single_instance(kind, train):
    model = fit(kind, train)
    assert predict(model, train.X[0]) in (0, 1)
    assert predict(model, train.X[0]) == model.predict(train.X[:1])[0]


def test_schema_mismatch(kind, train):
    model = fit(kind, train)
    with pytest.raises(ClassifierError):
        model.predict(train.X[:, :5])
    with pytest.raises(ClassifierError):
        predict(model, np.full(13, np.nan))


def test_single_class_rejected(kind):
    d = make_dataset([[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]], [1, 1, 1])
    with pytest.raises(ClassifierError):
        fit(kind, d)


def test_missing_cells_rejected(kind, cleveland):
    with pytest.raises(ClassifierError):
        fit(kind, cleveland)


def test_training_accuracy_reasonable(kind, train):
    model = fit(kind, train)
    assert (model.predict(train.X) == train.y).mean() > 0.75


def test_unknown_kind():
    with pytest.raises(ConfigError):
        make_kind("knn")
