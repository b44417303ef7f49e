from pathlib import Path

import numpy as np
import pytest

from cadfs.dataset import Dataset, Feature, FeatureSchema, parse_uci_cleveland

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
CLEVELAND_PATH = DATA_DIR / "processed.cleveland.data"

WEATHER_ROWS = """\
sunny hot high false no
sunny hot high true no
overcast hot high false yes
rainy mild high false yes
rainy cool normal false yes
rainy cool normal true no
overcast cool normal true yes
sunny mild high false no
sunny cool normal false yes
rainy mild normal false yes
sunny mild normal true yes
overcast mild high true yes
overcast hot normal false yes
rainy mild high true no
"""
WEATHER_LEVELS = (
    ("outlook", ("sunny", "overcast", "rainy")),
    ("temperature", ("hot", "mild", "cool")),
    ("humidity", ("high", "normal")),
    ("windy", ("false", "true")),
)


def make_dataset(X, y, arities=None, names=None) -> Dataset:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    p = X.shape[1]
    arities = arities if arities is not None else [None] * p
    names = names or [f"f{j}" for j in range(p)]
    schema = FeatureSchema(tuple(Feature(n, a) for n, a in zip(names, arities)))
    return Dataset(schema, X, y)


def weather() -> Dataset:
    rows, labels = [], []
    for line in WEATHER_ROWS.splitlines():
        *values, play = line.split()
        rows.append([levels.index(v) for (_, levels), v in zip(WEATHER_LEVELS, values)])
        labels.append(1 if play == "yes" else 0)
    return make_dataset(rows, labels, [len(lv) for _, lv in WEATHER_LEVELS], [n for n, _ in WEATHER_LEVELS])


def perfect_feature_dataset(n=60, noise=9, seed=0) -> Dataset:
    """Binary feature 0 equals the label; the other features are random binary noise."""
    rng = np.random.default_rng(seed)
    y = np.array([0, 1] * (n // 2))
    X = np.column_stack([y, rng.integers(0, 2, size=(n, noise))])
    return make_dataset(X, y, [2] * (noise + 1))


@pytest.fixture(scope="session")
def cleveland_text() -> str:
    return CLEVELAND_PATH.read_text()


@pytest.fixture(scope="session")
def cleveland(cleveland_text) -> Dataset:
    return parse_uci_cleveland(cleveland_text)


@pytest.fixture
def weather_data() -> Dataset:
    return weather()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
