"""C4.5 decision tree: gain-ratio splits, minimum leaf size, pessimistic pruning."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from statistics import NormalDist
from typing import ClassVar

import numpy as np

from ..dataset import NEGATIVE, POSITIVE, Dataset, DatasetError
from .base import MODEL_FORMAT, ConfigError, check_inputs, check_training_set


@dataclass(frozen=True)
class C45:
    name: ClassVar[str] = "c45"
    min_leaf: int = 2
    confidence: float = 0.25
    prune: bool = True

    def __post_init__(self):
        if self.min_leaf < 1:
            raise ConfigError("c45 min_leaf (M) must be >= 1")
        if not 0.0 < self.confidence <= 1.0:
            raise ConfigError("c45 confidence (C) must be in (0, 1]")

    def fit(self, train: Dataset, seed: int = 0) -> C45Model:
        check_training_set(train)
        root = _grow(train.X, train.y.astype(np.intp), train.schema.arities, self.min_leaf)
        model = C45Model(root, train.n_features)
        return c45_prune(model, self.confidence) if self.prune else model

    def params(self) -> dict:
        return {"min_leaf": self.min_leaf, "confidence": self.confidence, "prune": self.prune}


@dataclass(frozen=True)
class Node:
    """Tree node. A leaf has ``feature is None``.

    Continuous splits have ``threshold`` and children ``(<= t, > t)``.
    Categorical splits have ``values`` (the observed codes) with one child
    each; unseen codes fall back to this node's majority ``label``.
    """

    counts: tuple[int, int]
    label: int
    feature: int | None = None
    threshold: float | None = None
    values: tuple[int, ...] = ()
    children: tuple[Node, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def n(self) -> int:
        return self.counts[0] + self.counts[1]

    @property
    def errors(self) -> int:
        return self.n - self.counts[self.label]

    def as_leaf(self) -> Node:
        return Node(self.counts, self.label)

    def route(self, x: np.ndarray) -> Node | None:
        if self.threshold is not None:
            return self.children[0] if x[self.feature] <= self.threshold else self.children[1]
        code = int(x[self.feature])
        try:
            return self.children[self.values.index(code)]
        except ValueError:
            return None

    def to_dict(self) -> dict:
        out = {"counts": list(self.counts), "label": self.label}
        if not self.is_leaf:
            out["feature"] = self.feature
            if self.threshold is not None:
                out["threshold"] = self.threshold
            else:
                out["values"] = list(self.values)
            out["children"] = [c.to_dict() for c in self.children]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> Node:
        return cls(
            tuple(data["counts"]),
            data["label"],
            data.get("feature"),
            data.get("threshold"),
            tuple(data.get("values", ())),
            tuple(cls.from_dict(c) for c in data.get("children", ())),
        )


@dataclass(frozen=True)
class C45Model:
    root: Node
    n_features: int

    def predict(self, X) -> np.ndarray:
        X = check_inputs(X, self.n_features)
        out = np.empty(X.shape[0], dtype=np.int8)
        for i, x in enumerate(X):
            node = self.root
            while not node.is_leaf:
                nxt = node.route(x)
                if nxt is None:
                    break
                node = nxt
            out[i] = node.label
        return out

    def node_count(self) -> int:
        return _count(self.root)

    def leaves(self) -> list[Node]:
        return list(_leaves(self.root))

    def to_dict(self) -> dict:
        return {"format": MODEL_FORMAT, "kind": "c45", "n_features": self.n_features, "root": self.root.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> C45Model:
        return cls(Node.from_dict(data["root"]), data["n_features"])


def _count(node: Node) -> int:
    return 1 + sum(_count(c) for c in node.children)


def _leaves(node: Node):
    if node.is_leaf:
        yield node
    for c in node.children:
        yield from _leaves(c)


# ---------------------------------------------------------------------------
# Split criteria

def entropy(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _gain_and_split_info(table: np.ndarray) -> tuple[float, float]:
    """``table`` is branches x classes counts (empty branches allowed)."""
    table = table[table.sum(axis=1) > 0]
    sizes = table.sum(axis=1)
    n = sizes.sum()
    children = sum(s / n * entropy(row) for s, row in zip(sizes, table))
    gain = entropy(table.sum(axis=0)) - children
    return gain, entropy(sizes)


def _ratio(gain: float, split_info: float) -> float:
    return 0.0 if split_info <= 0.0 else gain / split_info


def gain_ratio(d: Dataset, feature: int, threshold: float | None = None) -> float:
    """Information gain of splitting ``d`` on ``feature`` divided by its split information.

    Categorical features split on every observed value; continuous features
    need a ``threshold`` and split into ``<= threshold`` / ``> threshold``.
    Degenerate single-branch splits score 0.
    """
    if not 0 <= feature < d.n_features:
        raise DatasetError(f"feature index {feature} out of range")
    arity = d.schema.features[feature].arity
    if (arity is None) != (threshold is not None):
        raise DatasetError("threshold must be given exactly when the feature is continuous")
    col = d.X[:, feature]
    if np.isnan(col).any():
        raise DatasetError("gain_ratio needs complete data")
    y = d.y.astype(np.intp)
    if arity is None:
        branch = (col > threshold).astype(np.intp)
        table = np.bincount(branch * 2 + y, minlength=4).reshape(2, 2)
    else:
        table = np.bincount(col.astype(np.intp) * 2 + y, minlength=2 * arity).reshape(arity, 2)
    return _ratio(*_gain_and_split_info(table))


@dataclass(frozen=True)
class _Candidate:
    feature: int
    gain: float
    ratio: float
    threshold: float | None


def _categorical_candidate(col, y, arity, j, min_leaf):
    codes = col.astype(np.intp)
    table = np.bincount(codes * 2 + y, minlength=2 * arity).reshape(arity, 2)
    sizes = table.sum(axis=1)
    observed = sizes[sizes > 0]
    if observed.size < 2 or observed.min() < min_leaf:
        return None
    gain, split = _gain_and_split_info(table)
    return _Candidate(j, gain, _ratio(gain, split), None)


def _continuous_candidate(col, y, j, min_leaf, parent_entropy):
    order = np.argsort(col, kind="stable")
    v, ys = col[order], y[order]
    n = v.size
    pos_left = np.cumsum(ys)[:-1]
    n_left = np.arange(1, n)
    ok = (v[1:] > v[:-1]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
    if not ok.any():
        return None
    idx = np.flatnonzero(ok)
    nl = n_left[idx].astype(float)
    pl = pos_left[idx].astype(float)
    nr = n - nl
    pr = ys.sum() - pl

    def h(pos, tot):
        p = pos / tot
        with np.errstate(divide="ignore", invalid="ignore"):
            t = -(p * np.log2(p)) - ((1 - p) * np.log2(1 - p))
        return np.nan_to_num(t)

    gains = parent_entropy - (nl / n) * h(pl, nl) - (nr / n) * h(pr, nr)
    best = int(np.argmax(gains))
    i = idx[best]
    threshold = (v[i] + v[i + 1]) / 2.0
    gain = float(gains[best])
    return _Candidate(j, gain, _ratio(gain, entropy([nl[best], nr[best]])), float(threshold))


def _majority(counts) -> int:
    return POSITIVE if counts[1] > counts[0] else NEGATIVE


def _grow(X: np.ndarray, y: np.ndarray, arities, min_leaf: int) -> Node:
    counts = (int((y == 0).sum()), int((y == 1).sum()))
    node = Node(counts, _majority(counts))
    if counts[0] == 0 or counts[1] == 0 or len(y) < 2 * min_leaf:
        return node
    parent_h = entropy(counts)
    candidates = []
    for j, arity in enumerate(arities):
        col = X[:, j]
        if arity is None:
            cand = _continuous_candidate(col, y, j, min_leaf, parent_h)
        else:
            cand = _categorical_candidate(col, y, arity, j, min_leaf)
        if cand is not None:
            candidates.append(cand)
    if not candidates:
        return node
    # only splits with at least average information gain compete on gain ratio
    mean_gain = sum(c.gain for c in candidates) / len(candidates)
    eligible = [c for c in candidates if c.gain >= mean_gain - 1e-12]
    best = max(eligible, key=lambda c: c.ratio)
    col = X[:, best.feature]
    if best.threshold is not None:
        left = col <= best.threshold
        parts = [left, ~left]
        values = ()
    else:
        values = tuple(int(v) for v in np.unique(col))
        parts = [col == v for v in values]
    children = tuple(_grow(X[m], y[m], arities, min_leaf) for m in parts)
    return replace(node, feature=best.feature, threshold=best.threshold, values=values, children=children)


# ---------------------------------------------------------------------------
# Pruning

def added_errors(n: float, e: float, confidence: float) -> float:
    """Extra errors of the upper confidence bound on a leaf's binomial error rate.

    Returns 0 for ``confidence > 0.5``, where the estimate falls back to the
    observed error count.
    """
    if confidence > 0.5:
        return 0.0
    if e < 1:
        base = n * (1.0 - confidence ** (1.0 / n))
        if e == 0:
            return base
        return base + e * (added_errors(n, 1.0, confidence) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = NormalDist().inv_cdf(1.0 - confidence)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


def _estimate(node: Node, confidence: float) -> float:
    return node.errors + added_errors(node.n, node.errors, confidence)


def _prune(node: Node, confidence: float) -> Node:
    if node.is_leaf:
        return node
    node = replace(node, children=tuple(_prune(c, confidence) for c in node.children))
    subtree = sum(_estimate(leaf, confidence) for leaf in _leaves(node))
    if _estimate(node, confidence) <= subtree + 1e-9:
        return node.as_leaf()
    return node


def c45_prune(model: C45Model, confidence: float) -> C45Model:
    """Bottom-up subtree replacement using the pessimistic error estimate."""
    if not 0.0 < confidence <= 1.0:
        raise ConfigError("confidence must be in (0, 1]")
    return C45Model(_prune(model.root, confidence), model.n_features)
