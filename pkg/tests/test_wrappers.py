import math

import numpy as np
import pytest

from cadfs import seeding
from cadfs.classifiers import NaiveBayes
from cadfs.dataset import DatasetError, FeatureMask
from cadfs import wrappers
from cadfs.wrappers import (
    FitnessEvaluator,
    GaConfig,
    SearchBudget,
    bfs_select,
    fitness,
    ga_select,
    mutate,
    sffs_select,
    two_point_crossover,
)

from .conftest import make_dataset, perfect_feature_dataset
from .oracles import exhaustive_best

NB = NaiveBayes()
M = FeatureMask.from_string


# -- operators ---------------------------------------------------------------

def test_crossover_example():
    c1, c2 = two_point_crossover(M("1" * 13), M("0" * 13), 3, 7)
    assert str(c1) == "1110000111111"
    assert str(c2) == "0001111000000"


def test_crossover_identical_parents():
    a = M("1010011010011")
    assert two_point_crossover(a, a, 2, 9) == (a, a)


def test_crossover_preserves_pairwise_content():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a = FeatureMask(tuple(rng.random(13) < 0.5))
        b = FeatureMask(tuple(rng.random(13) < 0.5))
        cut1, cut2 = sorted(rng.choice(14, size=2, replace=False))
        c1, c2 = two_point_crossover(a, b, int(cut1), int(cut2))
        assert np.array_equal(c1.as_array() ^ c2.as_array(), a.as_array() ^ b.as_array())
        assert np.array_equal(c1.as_array() + c2.as_array(), a.as_array() + b.as_array())


@pytest.mark.parametrize("cuts", [(3, 3), (5, 2), (-1, 4), (0, 14)])
def test_crossover_rejects_bad_cuts(cuts):
    with pytest.raises(ValueError):
        two_point_crossover(M("1" * 13), M("0" * 13), *cuts)


def test_mutation_extremes():
    rng = np.random.default_rng(0)
    m = M("1010011010011")
    assert mutate(m, 0.0, rng) == m
    assert str(mutate(M("0" * 13), 1.0, rng)) == "1" * 13


def test_mutation_repairs_all_zero():
    rng = np.random.default_rng(1)
    positions = {mutate(M("0" * 13), 0.0, rng).indices for _ in range(200)}
    assert all(len(p) == 1 for p in positions)
    assert len(positions) > 1


def test_mutation_flip_statistics():
    rng = np.random.default_rng(12345)
    base = M("1010011010011")
    trials = 100_000
    flips = sum(
        int((mutate(base, 0.09, rng).as_array() != base.as_array()).sum()) for _ in range(trials)
    )
    mean = flips / trials
    sigma = math.sqrt(13 * 0.09 * 0.91 / trials)
    assert abs(mean - 13 * 0.09) <= 3 * sigma


# -- fitness -----------------------------------------------------------------

def test_fitness_perfect_feature():
    d = perfect_feature_dataset()
    assert fitness(M("1000000000"), d, NB) == 1.0


def test_fitness_constant_feature_is_chance():
    d = make_dataset(np.column_stack([np.ones(60), np.arange(60)]), [0, 1] * 30, [2, None])
    assert fitness(M("10"), d, NB) == pytest.approx(0.5, abs=0.1)


def test_fitness_deterministic(cleveland):
    from cadfs.dataset import impute_missing

    d = impute_missing(cleveland)
    m = M("1010011010011")
    assert fitness(m, d, NB, 5, 3) == fitness(m, d, NB, 5, 3)
    assert 0.0 <= fitness(m, d, NB, 5, 3) <= 1.0


def test_fitness_rejects_empty_mask():
    with pytest.raises(DatasetError):
        fitness(M("0000000000"), perfect_feature_dataset(), NB)


def test_fitness_cache_counts_fits():
    d = perfect_feature_dataset()
    evaluator = FitnessEvaluator(d, NB, folds=5, seed=0)
    rng = np.random.default_rng(0)
    masks = [wrappers.random_mask(10, rng) for _ in range(30)]
    for m in masks + masks[:10]:
        evaluator(m)
    assert evaluator.fits <= evaluator.evaluations * 5
    assert evaluator.evaluations == len(set(masks))


# -- configuration -----------------------------------------------------------

def test_ga_config_lists_every_violation():
    with pytest.raises(ValueError) as info:
        GaConfig(population_size=3, generations=0, crossover_prob=1.5, fitness_folds=1)
    text = str(info.value)
    for name in ("population_size", "generations", "crossover_prob", "fitness_folds"):
        assert name in text


def test_search_budget_validation():
    with pytest.raises(ValueError):
        SearchBudget(max_expansions_without_improvement=0)
    with pytest.raises(ValueError):
        SearchBudget(max_subset_evaluations=0)


# -- GA ----------------------------------------------------------------------

def test_ga_finds_perfect_feature():
    result = ga_select(perfect_feature_dataset(), NB, GaConfig(seed=0))
    assert result.best_mask.bits[0]
    assert result.best_fitness == 1.0


def test_ga_elitism_lower_bound(cleveland):
    from cadfs.dataset import impute_missing

    d = impute_missing(cleveland)
    cfg = GaConfig(generations=1, seed=5)
    ones = FeatureMask.ones(13)
    result = ga_select(d, NB, cfg, initial=[ones])
    reference = fitness(ones, d, NB, 5, seeding.derive_seed(5, seeding.FITNESS_FOLDS))
    assert result.best_fitness >= reference


def test_ga_history_and_population(cleveland, monkeypatch):
    from cadfs.dataset import impute_missing

    d = impute_missing(cleveland)
    cfg = GaConfig(generations=15, seed=2)
    sizes = []
    original = wrappers._roulette

    def spy(fit, n, rng):
        sizes.append(fit.size)
        return original(fit, n, rng)

    monkeypatch.setattr(wrappers, "_roulette", spy)
    result = ga_select(d, NB, cfg)
    best = [b for b, _ in result.history]
    assert len(best) == 15
    assert all(x <= y for x, y in zip(best, best[1:]))
    assert sizes == [20] * 15
    assert result.best_fitness >= best[-1]


def test_ga_deterministic():
    d = perfect_feature_dataset(seed=3)
    a = ga_select(d, NB, GaConfig(seed=11, generations=5))
    b = ga_select(d, NB, GaConfig(seed=11, generations=5))
    assert a.to_json() == b.to_json()


# -- BFS ---------------------------------------------------------------------

def test_bfs_single_feature():
    d = make_dataset([0, 1] * 10, [0, 1] * 10, [2])
    result = bfs_select(d, NB)
    assert str(result.best_mask) == "1"


def four_feature_problem(seed=0):
    rng = np.random.default_rng(seed)
    y = np.array([0, 1] * 30)
    X = np.column_stack([
        np.where(rng.random(60) < 0.75, y, 1 - y),
        np.where(rng.random(60) < 0.65, y, 1 - y),
        rng.integers(0, 2, size=60),
        y + rng.normal(scale=1.2, size=60),
    ])
    return make_dataset(X, y, [2, 2, 2, None])


@pytest.mark.parametrize("seed", range(3))
def test_bfs_reaches_exhaustive_optimum(seed):
    d = four_feature_problem(seed)
    budget = SearchBudget(max_expansions_without_improvement=16)
    result = bfs_select(d, NB, budget, seed=seed)
    optimum = exhaustive_best(d, NB, 5, seeding.derive_seed(seed, seeding.FITNESS_FOLDS))
    assert result.best_fitness == optimum
    assert fitness(result.best_mask, d, NB, 5, seeding.derive_seed(seed, seeding.FITNESS_FOLDS)) == optimum


def test_bfs_never_revisits(monkeypatch):
    seen = []
    original = FitnessEvaluator.__call__

    def spy(self, mask):
        seen.append(mask)
        return original(self, mask)

    monkeypatch.setattr(FitnessEvaluator, "__call__", spy)
    bfs_select(perfect_feature_dataset(noise=5), NB, SearchBudget(max_expansions_without_improvement=10))
    assert len(seen) == len(set(seen))


def test_bfs_truncation_flag():
    result = bfs_select(perfect_feature_dataset(), NB, SearchBudget(max_subset_evaluations=3))
    assert result.truncated
    assert result.evaluations == 3
    assert result.best_mask.any()


# -- SFFS --------------------------------------------------------------------

def test_sffs_adds_perfect_feature_first():
    result = sffs_select(perfect_feature_dataset(), NB)
    assert result.history[0][0] == 1.0
    assert result.best_fitness == 1.0
    assert result.best_mask.bits[0]


@pytest.mark.parametrize("seed", range(3))
def test_sffs_monotone_trace_has_no_removals(seed):
    # each feature carries independent evidence, in decreasing strength
    rng = np.random.default_rng(seed)
    y = np.array([0, 1] * 1000)
    X = y[:, None] * np.array([1.2, 0.9, 0.6, 0.4]) + rng.normal(size=(2000, 4))
    result = sffs_select(make_dataset(X, y), NB)
    best = [b for b, _ in result.history]
    assert len(best) == 4  # one entry per forward step, none for removals
    assert all(x < y for x, y in zip(best, best[1:]))
    assert str(result.best_mask) == "1111"


def test_sffs_history_non_decreasing(cleveland):
    from cadfs.dataset import impute_missing

    result = sffs_select(impute_missing(cleveland), NB, seed=4)
    best = [b for b, _ in result.history]
    assert all(x <= y for x, y in zip(best, best[1:]))


# -- shared ------------------------------------------------------------------

@pytest.mark.parametrize("select", ["ga", "bfs", "sffs"])
def test_results_valid_and_deterministic(select, cleveland):
    from cadfs.dataset import impute_missing

    d = impute_missing(cleveland)
    run = {
        "ga": lambda: ga_select(d, NB, GaConfig(seed=3, generations=5)),
        "bfs": lambda: bfs_select(d, NB, seed=3),
        "sffs": lambda: sffs_select(d, NB, seed=3),
    }[select]
    a, b = run(), run()
    assert a.best_mask.any() and 0.0 <= a.best_fitness <= 1.0
    assert a.to_json(d.schema) == b.to_json(d.schema)
    data = a.to_dict(d.schema)
    assert len(data["mask"]) == 13
    assert list(data["selected_features"]) == list(a.best_mask.names(d.schema))
