"""Wrapper feature-subset search: genetic algorithm, best-first search, SFFS.

Every strategy scores a candidate mask by the internal cross-validated
accuracy of a classifier trained on the projected data. Scores are cached
per run, so each distinct mask is evaluated once.
"""

from __future__ import annotations

import heapq
import itertools
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import seeding
from .classifiers import ClassifierKind
from .dataset import Dataset, DatasetError, FeatureMask, project, stratified_folds

MIN_SELECTION_WEIGHT = 1e-6


class WrapperError(RuntimeError):
    pass


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 20
    generations: int = 40
    crossover_prob: float = 0.2
    mutation_prob: float = 0.09
    seed: int = 0
    fitness_folds: int = 5

    def errors(self) -> list[str]:
        out = []
        if self.population_size < 2 or self.population_size % 2:
            out.append("population_size must be an even number >= 2")
        if self.generations < 1:
            out.append("generations must be >= 1")
        for name in ("crossover_prob", "mutation_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                out.append(f"{name} must be in [0, 1]")
        if self.fitness_folds < 2:
            out.append("fitness_folds must be >= 2")
        if self.seed < 0:
            out.append("seed must be non-negative")
        return out

    def __post_init__(self):
        problems = self.errors()
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class SearchBudget:
    max_expansions_without_improvement: int = 5
    max_subset_evaluations: int = 10_000
    fitness_folds: int = 5

    def __post_init__(self):
        if self.max_expansions_without_improvement < 1 or self.max_subset_evaluations < 1:
            raise ValueError("search budget limits must be >= 1")
        if self.fitness_folds < 2:
            raise ValueError("fitness_folds must be >= 2")


@dataclass(frozen=True)
class WrapperResult:
    wrapper: str
    best_mask: FeatureMask
    best_fitness: float
    history: tuple[tuple[float, float], ...]
    evaluations: int
    truncated: bool = False
    config: dict = field(default_factory=dict)

    def to_dict(self, schema=None) -> dict:
        out = {
            "wrapper": self.wrapper,
            "mask": str(self.best_mask),
            "best_fitness": self.best_fitness,
            "history": [{"best": b, "mean": m} for b, m in self.history],
            "evaluations": self.evaluations,
            "truncated": self.truncated,
            "config": self.config,
        }
        if schema is not None:
            out["selected_features"] = self.best_mask.names(schema)
        return out

    def to_json(self, schema=None) -> str:
        return json.dumps(self.to_dict(schema), indent=2, sort_keys=True) + "\n"


class FitnessEvaluator:
    """Cached internal-CV accuracy of ``kind`` on ``train`` restricted to a mask.

    The internal folds are drawn once per evaluator, so every mask is scored
    on the same partition.
    """

    def __init__(self, train: Dataset, kind: ClassifierKind, folds: int = 5, seed: int = 0):
        if train.has_missing():
            raise DatasetError("fitness needs complete data; impute first")
        self.train = train
        self.kind = kind
        self.assignment = stratified_folds(train, folds, seed)
        self.fit_seed = seeding.derive_seed(seed, seeding.FIT)
        self.cache: dict[FeatureMask, float] = {}
        self.fits = 0

    @property
    def evaluations(self) -> int:
        return len(self.cache)

    def __call__(self, mask: FeatureMask) -> float:
        if mask in self.cache:
            return self.cache[mask]
        if not mask.any():
            raise DatasetError("fitness of an all-zero mask is undefined")
        data = project(self.train, mask)
        accs = []
        for f in range(self.assignment.k):
            tr = data.take(self.assignment.train_indices(f))
            te_idx = self.assignment.test_indices(f)
            model = self.kind.fit(tr, self.fit_seed)
            self.fits += 1
            pred = model.predict(data.X[te_idx])
            accs.append(float(np.mean(pred == data.y[te_idx])))
        value = float(np.mean(accs))
        self.cache[mask] = value
        return value

    def evaluate_all(self, masks) -> list[float]:
        return [self(m) for m in masks]


def fitness(mask: FeatureMask, train: Dataset, kind: ClassifierKind, folds: int = 5, seed: int = 0) -> float:
    """Mean accuracy of a stratified ``folds``-fold CV of ``kind`` on ``project(train, mask)``."""
    return FitnessEvaluator(train, kind, folds, seed)(mask)


# ---------------------------------------------------------------------------
# Genetic operators

def two_point_crossover(a: FeatureMask, b: FeatureMask, cut1: int, cut2: int) -> tuple[FeatureMask, FeatureMask]:
    """Swap the segment ``[cut1, cut2)`` between two parents."""
    if len(a) != len(b):
        raise ValueError("parents differ in length")
    if not 0 <= cut1 < cut2 <= len(a):
        raise ValueError(f"invalid cut points ({cut1}, {cut2}) for length {len(a)}")
    x, y = a.bits, b.bits
    return (
        FeatureMask(x[:cut1] + y[cut1:cut2] + x[cut2:]),
        FeatureMask(y[:cut1] + x[cut1:cut2] + y[cut2:]),
    )


def repair(mask: FeatureMask, rng: np.random.Generator) -> FeatureMask:
    """Set one uniformly chosen bit of an all-zero mask."""
    if mask.any():
        return mask
    return mask.flip(int(rng.integers(len(mask))))


def mutate(mask: FeatureMask, per_gene_prob: float, rng: np.random.Generator) -> FeatureMask:
    flips = rng.random(len(mask)) < per_gene_prob
    bits = np.logical_xor(mask.as_array(), flips)
    return repair(FeatureMask(tuple(bits)), rng)


def random_mask(length: int, rng: np.random.Generator) -> FeatureMask:
    return repair(FeatureMask(tuple(rng.random(length) < 0.5)), rng)


def _roulette(fit: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    weights = np.maximum(fit, MIN_SELECTION_WEIGHT)
    return rng.choice(fit.size, size=n, p=weights / weights.sum())


def ga_select(
    train: Dataset,
    kind: ClassifierKind,
    cfg: GaConfig = GaConfig(),
    initial: list[FeatureMask] | None = None,
) -> WrapperResult:
    """Genetic search over feature masks.

    Each generation pairs parents by fitness-proportionate selection, crosses
    each pair with probability ``crossover_prob`` (two random cut points),
    mutates every child bit-wise with ``mutation_prob`` and lets the best
    children replace the worst incumbents whenever they score strictly higher.
    The population size never changes. ``initial`` optionally seeds the first
    population; missing members are drawn at random.
    """
    n = train.n_features
    rng = seeding.make_rng(cfg.seed)
    evaluate = FitnessEvaluator(
        train, kind, cfg.fitness_folds, seeding.derive_seed(cfg.seed, seeding.FITNESS_FOLDS)
    )

    def score(masks, generation):
        out = []
        for m in masks:
            try:
                out.append(evaluate(m))
            except Exception as exc:
                raise WrapperError(f"fitness failed in generation {generation} for mask {m}: {exc}") from exc
        return np.array(out)

    population = list(initial or [])[: cfg.population_size]
    if any(len(m) != n or not m.any() for m in population):
        raise ValueError("initial masks must match the feature count and be non-empty")
    population += [random_mask(n, rng) for _ in range(cfg.population_size - len(population))]
    fit = score(population, 0)

    best_i = int(np.argmax(fit))
    best_mask, best_fit = population[best_i], float(fit[best_i])
    history = []
    for gen in range(1, cfg.generations + 1):
        parents = _roulette(fit, cfg.population_size, rng)
        children = []
        for p, q in zip(parents[0::2], parents[1::2]):
            a, b = population[p], population[q]
            if rng.random() < cfg.crossover_prob:
                cut1, cut2 = sorted(rng.choice(n + 1, size=2, replace=False))
                a, b = two_point_crossover(a, b, int(cut1), int(cut2))
            children += [mutate(a, cfg.mutation_prob, rng), mutate(b, cfg.mutation_prob, rng)]
        child_fit = score(children, gen)

        for c in np.argsort(-child_fit, kind="stable"):
            if child_fit[c] > best_fit:
                best_mask, best_fit = children[c], float(child_fit[c])
        worst_first = np.argsort(fit, kind="stable")
        best_first = np.argsort(-child_fit, kind="stable")
        for slot, c in zip(worst_first, best_first):
            if child_fit[c] <= fit[slot]:
                break
            population[slot] = children[c]
            fit[slot] = child_fit[c]
        history.append((float(fit.max()), float(fit.mean())))

    return WrapperResult("ga", best_mask, best_fit, tuple(history), evaluate.evaluations,
                         config={"kind": kind.name, **asdict(cfg)})


# ---------------------------------------------------------------------------
# Best-first search

def bfs_select(
    train: Dataset,
    kind: ClassifierKind,
    budget: SearchBudget = SearchBudget(),
    seed: int = 0,
) -> WrapperResult:
    """Best-first search over the subset lattice, starting from the empty set.

    The open list is ordered by fitness (ties: fewer features, then discovery
    order). Expanding a node scores every unvisited single-bit addition and
    removal. The search stops after ``max_expansions_without_improvement``
    consecutive expansions without a new best, when the open list is empty,
    or, flagged as truncated, when ``max_subset_evaluations`` is reached.
    """
    n = train.n_features
    evaluate = FitnessEvaluator(
        train, kind, budget.fitness_folds, seeding.derive_seed(seed, seeding.FITNESS_FOLDS)
    )
    counter = itertools.count()
    empty = FeatureMask.zeros(n)
    visited = {empty}
    open_list: list = []
    best_mask, best_fit = None, -1.0
    history = []
    stale = 0
    truncated = False
    node = empty
    while True:
        improved = False
        scores = []
        for i in range(n):
            child = node.flip(i)
            if child in visited or not child.any():
                continue
            if evaluate.evaluations >= budget.max_subset_evaluations:
                truncated = True
                break
            visited.add(child)
            f = evaluate(child)
            scores.append(f)
            heapq.heappush(open_list, (-f, child.count(), next(counter), child))
            if f > best_fit:
                best_mask, best_fit, improved = child, f, True
        history.append((best_fit, float(np.mean(scores)) if scores else best_fit))
        stale = 0 if improved else stale + 1
        if truncated or stale >= budget.max_expansions_without_improvement or not open_list:
            break
        node = heapq.heappop(open_list)[-1]

    return WrapperResult("bfs", best_mask, best_fit, tuple(history), evaluate.evaluations, truncated,
                         config={"kind": kind.name, "seed": seed, **asdict(budget)})


# ---------------------------------------------------------------------------
# Sequential floating forward selection

def sffs_select(
    train: Dataset,
    kind: ClassifierKind,
    seed: int = 0,
    budget: SearchBudget = SearchBudget(),
) -> WrapperResult:
    """Sequential floating forward selection.

    After each forward step (add the single best feature), features are
    removed one at a time for as long as the removal strictly beats the best
    subset seen so far at the smaller size. Stops when a forward step fails
    to beat the best subset already known at its size, or when every feature
    is selected. Returns the best subset over all sizes.
    """
    n = train.n_features
    evaluate = FitnessEvaluator(
        train, kind, budget.fitness_folds, seeding.derive_seed(seed, seeding.FITNESS_FOLDS)
    )
    best_at: dict[int, tuple[float, FeatureMask]] = {}
    best_mask, best_fit = None, -1.0
    history = []
    truncated = False
    current = FeatureMask.zeros(n)

    def step(candidates):
        nonlocal truncated
        if evaluate.evaluations + len(candidates) > budget.max_subset_evaluations:
            truncated = True
            return None
        scores = evaluate.evaluate_all(candidates)
        i = int(np.argmax(scores))
        return candidates[i], scores[i], float(np.mean(scores))

    def record(mask, f, mean):
        nonlocal best_mask, best_fit
        if f > best_fit:
            best_mask, best_fit = mask, f
        history.append((best_fit, mean))

    while current.count() < n:
        got = step([current.flip(i) for i in range(n) if not current.bits[i]])
        if got is None:
            break
        added, f, mean = got
        size = added.count()
        if size in best_at and f <= best_at[size][0]:
            record(added, f, mean)
            break
        best_at[size] = (f, added)
        current = added
        record(added, f, mean)

        while current.count() > 1:
            got = step([current.flip(i) for i in current.indices])
            if got is None:
                break
            reduced, f, mean = got
            size = reduced.count()
            if size in best_at and f <= best_at[size][0]:
                break
            best_at[size] = (f, reduced)
            current = reduced
            record(reduced, f, mean)
        if truncated:
            break

    return WrapperResult("sffs", best_mask, best_fit, tuple(history), evaluate.evaluations, truncated,
                         config={"kind": kind.name, "seed": seed, **asdict(budget)})
