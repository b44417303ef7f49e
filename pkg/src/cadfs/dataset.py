"""Dataset parsing, cleaning, projection and stratified partitioning.

Feature values are stored as a float matrix with ``nan`` marking missing
cells. Categorical features hold integer codes in ``[0, arity)``; the raw
UCI values behind each code are kept in ``Feature.levels``. Labels are
``1`` (positive, disease present) and ``0`` (negative).
"""

from __future__ import annotations

import hashlib
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

POSITIVE = 1
NEGATIVE = 0

MISSING_TOKEN = "?"
SCHEMA_FORMAT = "cadfs-schema/1"


class DatasetError(ValueError):
    """Raised for invalid datasets, schemas, masks or fold requests."""


class ParseError(DatasetError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class Feature:
    name: str
    arity: int | None = None
    levels: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.name or any(c in self.name for c in ",\n\t "):
            raise DatasetError(f"invalid feature name {self.name!r}")
        if self.arity is not None and self.arity < 2:
            raise DatasetError(f"feature {self.name!r}: categorical arity must be >= 2")
        if self.levels is not None and (self.arity is None or len(self.levels) != self.arity):
            raise DatasetError(f"feature {self.name!r}: levels do not match arity")

    @property
    def is_categorical(self) -> bool:
        return self.arity is not None

    @property
    def kind(self) -> str:
        return "categorical" if self.is_categorical else "continuous"


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[Feature, ...]
    class_name: str = "class"

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if not names:
            raise DatasetError("schema has no features")
        if len(set(names)) != len(names):
            raise DatasetError("feature names must be unique")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    @property
    def arities(self) -> tuple[int | None, ...]:
        return tuple(f.arity for f in self.features)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DatasetError(f"unknown feature {name!r}") from None

    def subset(self, indices: Sequence[int]) -> FeatureSchema:
        return FeatureSchema(tuple(self.features[i] for i in indices), self.class_name)


class Dataset:
    """Immutable instance matrix plus binary labels under a schema."""

    __slots__ = ("schema", "X", "y")

    def __init__(self, schema: FeatureSchema, X, y):
        X = np.array(X, dtype=float, copy=True)
        y = np.array(y, dtype=np.int8, copy=True)
        if X.ndim != 2 or X.shape[1] != len(schema):
            raise DatasetError(f"expected {len(schema)} feature columns, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DatasetError("label vector length does not match instance count")
        if not np.isin(y, (NEGATIVE, POSITIVE)).all():
            raise DatasetError("labels must be 0 (negative) or 1 (positive)")
        for j, feat in enumerate(schema.features):
            col = X[:, j]
            present = col[~np.isnan(col)]
            if np.isinf(present).any():
                raise DatasetError(f"feature {feat.name!r} has infinite values")
            if feat.is_categorical and present.size:
                if (present != np.round(present)).any() or present.min() < 0 or present.max() >= feat.arity:
                    raise DatasetError(f"feature {feat.name!r}: codes must be integers in [0, {feat.arity})")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __setattr__(self, name, value):
        raise AttributeError("Dataset is immutable")

    def __reduce__(self):
        return (Dataset, (self.schema, self.X, self.y))

    def __len__(self) -> int:
        return self.X.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.schema == other.schema
            and self.X.shape == other.X.shape
            and bool(np.array_equal(self.X, other.X, equal_nan=True))
            and bool(np.array_equal(self.y, other.y))
        )

    def __repr__(self) -> str:
        return f"Dataset({len(self)} instances, features={list(self.schema.names)})"

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.X)

    def has_missing(self) -> bool:
        return bool(self.missing.any())

    def missing_counts(self) -> dict[str, int]:
        return dict(zip(self.schema.names, (int(c) for c in self.missing.sum(axis=0))))

    def class_counts(self) -> tuple[int, int]:
        """(negative, positive) counts."""
        pos = int(self.y.sum())
        return len(self) - pos, pos

    def take(self, indices) -> Dataset:
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(self.schema, self.X[indices], self.y[indices])

    def with_labels(self, y) -> Dataset:
        return Dataset(self.schema, self.X, y)

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(schema_to_text(self.schema).encode())
        digest.update(to_csv(self).encode())
        return digest.hexdigest()


# ---------------------------------------------------------------------------
# UCI Cleveland format

# Field order of ``processed.cleveland.data`` (the 14th field, ``num``, is the class).
UCI_FIELDS = (
    "age", "sex", "cp", "restbps", "chol", "fbs", "restecg",
    "thalach", "exang", "oldpeak", "slope", "ca", "thal",
)

CLEVELAND_SCHEMA = FeatureSchema(
    (
        Feature("cp", 4, (1.0, 2.0, 3.0, 4.0)),
        Feature("age"),
        Feature("sex", 2, (0.0, 1.0)),
        Feature("restbps"),
        Feature("chol"),
        Feature("fbs", 2, (0.0, 1.0)),
        Feature("restecg", 3, (0.0, 1.0, 2.0)),
        Feature("thalach"),
        Feature("exang", 2, (0.0, 1.0)),
        Feature("oldpeak"),
        Feature("slope", 3, (1.0, 2.0, 3.0)),
        Feature("ca", 4, (0.0, 1.0, 2.0, 3.0)),
        Feature("thal", 3, (3.0, 6.0, 7.0)),
    ),
    class_name="num",
)

_UCI_TO_SCHEMA = tuple(UCI_FIELDS.index(name) for name in CLEVELAND_SCHEMA.names)


def _parse_number(token: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"unparsable value {token!r}", lineno) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {token!r}", lineno)
    return value


def parse_uci_cleveland(text: str) -> Dataset:
    """Parse the UCI ``processed.cleveland.data`` format.

    Each non-blank line holds 13 predictor values followed by ``num`` (0-4);
    ``?`` marks a missing cell. The label is positive iff ``num > 0``.
    Columns are reordered to ``CLEVELAND_SCHEMA`` order and categorical
    values are replaced by their level index.
    """
    rows, labels = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        tokens = [t.strip() for t in line.split(",")]
        if len(tokens) != len(UCI_FIELDS) + 1:
            raise ParseError(f"expected {len(UCI_FIELDS) + 1} fields, got {len(tokens)}", lineno)
        if tokens[-1] == MISSING_TOKEN:
            raise ParseError("class field is missing", lineno)
        num = _parse_number(tokens[-1], lineno)
        if num < 0:
            raise ParseError(f"class value {tokens[-1]!r} is negative", lineno)
        raw = [math.nan if t == MISSING_TOKEN else _parse_number(t, lineno) for t in tokens[:-1]]
        row = []
        for feat, src in zip(CLEVELAND_SCHEMA.features, _UCI_TO_SCHEMA):
            value = raw[src]
            if feat.is_categorical and not math.isnan(value):
                if value not in feat.levels:
                    raise ParseError(f"{feat.name}: unexpected level {tokens[src]!r}", lineno)
                value = float(feat.levels.index(value))
            row.append(value)
        rows.append(row)
        labels.append(POSITIVE if num > 0 else NEGATIVE)
    if not rows:
        raise ParseError("no instances in input")
    return Dataset(CLEVELAND_SCHEMA, rows, labels)


# ---------------------------------------------------------------------------
# Canonical CSV + schema sidecar

def schema_to_text(schema: FeatureSchema) -> str:
    """Key-value sidecar, one ``feature = name kind [arity [levels]]`` line per feature."""
    lines = [f"format = {SCHEMA_FORMAT}", f"class_name = {schema.class_name}"]
    for f in schema.features:
        if f.is_categorical:
            entry = f"{f.name} categorical {f.arity}"
            if f.levels is not None:
                entry += " " + ",".join(repr(v) for v in f.levels)
        else:
            entry = f"{f.name} continuous"
        lines.append(f"feature = {entry}")
    return "\n".join(lines) + "\n"


def schema_from_text(text: str) -> FeatureSchema:
    features, class_name, fmt = [], None, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep:
            raise ParseError("expected 'key = value'", lineno)
        if key == "format":
            fmt = value
        elif key == "class_name":
            class_name = value
        elif key == "feature":
            parts = value.split()
            try:
                if len(parts) == 2 and parts[1] == "continuous":
                    features.append(Feature(parts[0]))
                elif len(parts) in (3, 4) and parts[1] == "categorical":
                    levels = tuple(float(v) for v in parts[3].split(",")) if len(parts) == 4 else None
                    features.append(Feature(parts[0], int(parts[2]), levels))
                else:
                    raise ParseError(f"bad feature entry {value!r}", lineno)
            except (DatasetError, ValueError) as exc:
                if isinstance(exc, ParseError):
                    raise
                raise ParseError(str(exc), lineno) from None
        else:
            raise ParseError(f"unknown key {key!r}", lineno)
    if fmt != SCHEMA_FORMAT:
        raise ParseError(f"unsupported schema format {fmt!r}")
    if class_name is None:
        raise ParseError("schema lacks class_name")
    return FeatureSchema(tuple(features), class_name)


def _format_cell(value: float, categorical: bool) -> str:
    if math.isnan(value):
        return MISSING_TOKEN
    return str(int(value)) if categorical else repr(float(value))


def to_csv(d: Dataset) -> str:
    cats = [f.is_categorical for f in d.schema.features]
    lines = [",".join(d.schema.names + (d.schema.class_name,))]
    for row, label in zip(d.X, d.y):
        cells = [_format_cell(v, c) for v, c in zip(row, cats)]
        cells.append(str(int(label)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def from_csv(text: str, schema: FeatureSchema) -> Dataset:
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty input")
    header = [h.strip() for h in lines[0].split(",")]
    expected = list(schema.names) + [schema.class_name]
    if header != expected:
        raise ParseError(f"header {header} does not match schema {expected}", 1)
    rows, labels = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        tokens = [t.strip() for t in line.split(",")]
        if len(tokens) != len(expected):
            raise ParseError(f"expected {len(expected)} fields, got {len(tokens)}", lineno)
        rows.append([math.nan if t == MISSING_TOKEN else _parse_number(t, lineno) for t in tokens[:-1]])
        if tokens[-1] not in ("0", "1"):
            raise ParseError(f"label must be 0 or 1, got {tokens[-1]!r}", lineno)
        labels.append(int(tokens[-1]))
    if not rows:
        raise ParseError("no instances in input")
    try:
        return Dataset(schema, rows, labels)
    except ParseError:
        raise
    except DatasetError as exc:
        raise ParseError(str(exc)) from None


# ---------------------------------------------------------------------------
# Missing values

@dataclass(frozen=True)
class Imputer:
    """Per-feature fill values: mode for categorical, mean for continuous."""

    fill: tuple[float, ...]

    def apply(self, d: Dataset) -> Dataset:
        if len(self.fill) != d.n_features:
            raise DatasetError("imputer was fitted on a different schema")
        if not d.has_missing():
            return d
        X = np.where(d.missing, np.asarray(self.fill)[None, :], d.X)
        return Dataset(d.schema, X, d.y)


def fit_imputer(d: Dataset) -> Imputer:
    fill = []
    for j, feat in enumerate(d.schema.features):
        col = d.X[:, j]
        present = col[~np.isnan(col)]
        if present.size == 0:
            raise DatasetError(f"feature {feat.name!r} is entirely missing")
        if feat.is_categorical:
            # ties resolve to the smallest code
            fill.append(float(np.argmax(np.bincount(present.astype(np.intp), minlength=feat.arity))))
        else:
            fill.append(float(present.mean()))
    return Imputer(tuple(fill))


def impute_missing(d: Dataset, strategy: str = "mode_mean") -> Dataset:
    if strategy == "mode_mean":
        return fit_imputer(d).apply(d)
    if strategy == "drop_rows":
        keep = ~d.missing.any(axis=1)
        if not keep.any():
            raise DatasetError("every instance has a missing cell")
        return d if keep.all() else d.take(np.flatnonzero(keep))
    raise DatasetError(f"unknown imputation strategy {strategy!r}")


# ---------------------------------------------------------------------------
# Feature masks

@dataclass(frozen=True)
class FeatureMask:
    bits: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(bool(b) for b in self.bits))

    @classmethod
    def from_string(cls, text: str) -> FeatureMask:
        if not text or set(text) - {"0", "1"}:
            raise DatasetError(f"mask string must be non-empty 0/1 digits, got {text!r}")
        return cls(tuple(c == "1" for c in text))

    @classmethod
    def from_indices(cls, indices: Iterable[int], length: int) -> FeatureMask:
        chosen = set(indices)
        if any(i < 0 or i >= length for i in chosen):
            raise DatasetError("mask index out of range")
        return cls(tuple(i in chosen for i in range(length)))

    @classmethod
    def ones(cls, length: int) -> FeatureMask:
        return cls((True,) * length)

    @classmethod
    def zeros(cls, length: int) -> FeatureMask:
        return cls((False,) * length)

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def __and__(self, other: FeatureMask) -> FeatureMask:
        self._check_length(other)
        return FeatureMask(tuple(a and b for a, b in zip(self.bits, other.bits)))

    def _check_length(self, other: FeatureMask):
        if len(other) != len(self):
            raise DatasetError("mask lengths differ")

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)

    def count(self) -> int:
        return sum(self.bits)

    def any(self) -> bool:
        return any(self.bits)

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=bool)

    def flip(self, i: int) -> FeatureMask:
        bits = list(self.bits)
        bits[i] = not bits[i]
        return FeatureMask(tuple(bits))

    def restrict(self, outer: FeatureMask) -> FeatureMask:
        """This mask's bits at the positions ``outer`` selects."""
        self._check_length(outer)
        return FeatureMask(tuple(self.bits[i] for i in outer.indices))

    def names(self, schema: FeatureSchema) -> list[str]:
        return [schema.features[i].name for i in self.indices]


def project(d: Dataset, mask: FeatureMask) -> Dataset:
    if len(mask) != d.n_features:
        raise DatasetError(f"mask has {len(mask)} bits, dataset has {d.n_features} features")
    if not mask.any():
        raise DatasetError("cannot project onto an all-zero mask")
    if mask.count() == d.n_features:
        return d
    idx = list(mask.indices)
    return Dataset(d.schema.subset(idx), d.X[:, idx], d.y)


# ---------------------------------------------------------------------------
# Stratified folds

@dataclass(frozen=True)
class FoldAssignment:
    fold_of: np.ndarray
    k: int
    seed: int

    def __post_init__(self):
        self.fold_of.flags.writeable = False

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)

    def sizes(self) -> list[int]:
        return np.bincount(self.fold_of, minlength=self.k).tolist()


def stratified_folds(d: Dataset, k: int, seed: int, stratified: bool = True) -> FoldAssignment:
    """Assign every instance to one of ``k`` folds.

    Each class's indices are shuffled with a PCG64 generator seeded by
    ``seed`` and dealt round-robin; the dealing position carries over from
    one class to the next, so overall fold sizes also differ by at most one.
    With ``stratified=False`` all instances are shuffled and dealt as one group.
    """
    if k < 2:
        raise DatasetError("fold count must be >= 2")
    if stratified:
        neg, pos = d.class_counts()
        if min(neg, pos) < k:
            raise DatasetError(f"each class needs >= {k} instances, have {neg} negative / {pos} positive")
        groups = [np.flatnonzero(d.y == NEGATIVE), np.flatnonzero(d.y == POSITIVE)]
    else:
        if len(d) < k:
            raise DatasetError(f"need >= {k} instances")
        groups = [np.arange(len(d))]
    rng = np.random.Generator(np.random.PCG64(seed))
    fold_of = np.empty(len(d), dtype=np.intp)
    start = 0
    for members in groups:
        shuffled = rng.permutation(members)
        fold_of[shuffled] = (start + np.arange(shuffled.size)) % k
        start = (start + shuffled.size) % k
    return FoldAssignment(fold_of, k, seed)


def load_dataset(path, impute: str | None = None) -> Dataset:
    """Read a UCI Cleveland file, or a canonical CSV when ``<path>.schema`` exists."""
    from pathlib import Path

    path = Path(path)
    text = path.read_text()
    sidecar = path.with_name(path.name + ".schema")
    if sidecar.exists():
        d = from_csv(text, schema_from_text(sidecar.read_text()))
    else:
        d = parse_uci_cleveland(text)
    return impute_missing(d, impute) if impute else d
