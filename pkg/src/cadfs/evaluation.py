"""Outer cross-validation around a wrapper, confusion-matrix metrics and the benchmark grid."""

from __future__ import annotations

import csv
import io
import json
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import seeding
from .classifiers import DISPLAY_NAMES, ClassifierKind, NaiveBayes
from .dataset import (
    POSITIVE,
    Dataset,
    DatasetError,
    FeatureMask,
    FoldAssignment,
    fit_imputer,
    impute_missing,
    project,
    stratified_folds,
)
from .wrappers import GaConfig, SearchBudget, bfs_select, ga_select, sffs_select

WRAPPERS = ("ga", "bfs", "sffs", "none")
CLASSIFIERS = ("nb", "svm", "mlp", "c45")
WRAPPER_LABELS = {"ga": "GA wrapper", "bfs": "BFS wrapper", "sffs": "SFFS wrapper", "none": "Without FS"}
REPORT_FORMAT = "cadfs-report/1"


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return asdict(self)


def confusion(predictions, truth) -> ConfusionMatrix:
    """Count outcomes with the positive class meaning disease present."""
    p = np.asarray(predictions)
    t = np.asarray(truth)
    if p.shape != t.shape or p.ndim != 1:
        raise ValueError(f"prediction/truth length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("no predictions to score")
    pp, tp_ = p == POSITIVE, t == POSITIVE
    return ConfusionMatrix(
        tp=int(np.sum(pp & tp_)),
        fp=int(np.sum(pp & ~tp_)),
        fn=int(np.sum(~pp & tp_)),
        tn=int(np.sum(~pp & ~tp_)),
    )


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total <= 0:
        raise ValueError("accuracy of an empty confusion matrix")
    return (cm.tn + cm.tp) / (cm.tn + cm.tp + cm.fn + cm.fp)


@dataclass(frozen=True)
class Selection:
    """How feature masks are chosen on each outer-training partition."""

    wrapper: str = "none"
    evaluator: ClassifierKind | None = None  # None: wrap the classifier being scored
    ga: GaConfig = GaConfig()
    budget: SearchBudget = SearchBudget()

    def __post_init__(self):
        if self.wrapper not in WRAPPERS:
            raise ValueError(f"unknown wrapper {self.wrapper!r}; choose from {WRAPPERS}")

    def select(self, train: Dataset, kind: ClassifierKind, seed: int) -> tuple[FeatureMask, float | None]:
        evaluator = self.evaluator or kind
        if self.wrapper == "none":
            return FeatureMask.ones(train.n_features), None
        if self.wrapper == "ga":
            result = ga_select(train, evaluator, replace(self.ga, seed=seed))
        elif self.wrapper == "bfs":
            result = bfs_select(train, evaluator, self.budget, seed)
        else:
            result = sffs_select(train, evaluator, seed, self.budget)
        return result.best_mask, result.best_fitness

    def describe(self) -> dict:
        out = {"wrapper": self.wrapper, "evaluator": _kind_dict(self.evaluator) if self.evaluator else "same"}
        if self.wrapper == "ga":
            ga = asdict(self.ga)
            ga.pop("seed")
            out["ga"] = ga
        elif self.wrapper in ("bfs", "sffs"):
            out["budget"] = asdict(self.budget)
        return out


def _kind_dict(kind: ClassifierKind) -> dict:
    return {"name": kind.name, **kind.params()}


@dataclass(frozen=True)
class FoldResult:
    fold: int
    mask: FeatureMask
    confusion: ConfusionMatrix
    accuracy: float
    selection_fitness: float | None = None

    def to_dict(self, schema=None) -> dict:
        out = {
            "fold": self.fold,
            "mask": str(self.mask),
            "confusion": self.confusion.to_dict(),
            "accuracy": self.accuracy,
            "selection_fitness": self.selection_fitness,
        }
        if schema is not None:
            out["selected_features"] = self.mask.names(schema)
        return out


@dataclass(frozen=True)
class CvReport:
    wrapper: str
    classifier: dict
    seed: int
    k: int
    per_fold: tuple[FoldResult, ...]
    fingerprint: str
    selection: dict = field(default_factory=dict)

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([f.accuracy for f in self.per_fold])

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self) -> float:
        return float(np.std(self.accuracies))

    @property
    def masks(self) -> list[FeatureMask]:
        return [f.mask for f in self.per_fold]

    @property
    def modal_mask(self) -> FeatureMask:
        counts = Counter(self.masks)
        top = max(counts.values())
        return next(m for m in self.masks if counts[m] == top)

    def to_dict(self, schema=None) -> dict:
        return {
            "wrapper": self.wrapper,
            "classifier": self.classifier,
            "selection": self.selection,
            "seed": self.seed,
            "k": self.k,
            "dataset_fingerprint": self.fingerprint,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "modal_mask": str(self.modal_mask),
            "per_fold": [f.to_dict(schema) for f in self.per_fold],
        }


def _fold_job(args):
    d, assignment, fold, selection, kinds, seed, impute_in_fold = args
    train = d.take(assignment.train_indices(fold))
    test = d.take(assignment.test_indices(fold))
    if impute_in_fold:
        imputer = fit_imputer(train)
        train, test = imputer.apply(train), imputer.apply(test)
    wrapper_seed = seeding.derive_seed(seed, seeding.WRAPPER, fold)
    fit_seed = seeding.derive_seed(seed, seeding.FIT, fold)
    out = []
    shared = None
    for kind in kinds:
        try:
            if selection.evaluator is not None and shared is not None:
                mask, sel_fit = shared
            else:
                mask, sel_fit = selection.select(train, kind, wrapper_seed)
                shared = (mask, sel_fit)
            model = kind.fit(project(train, mask), fit_seed)
            cm = confusion(model.predict(project(test, mask).X), test.y)
            out.append(FoldResult(fold, mask, cm, accuracy(cm), sel_fit))
        except Exception as exc:
            out.append(exc)
    return out


def run_folds(
    d: Dataset,
    selection: Selection,
    kinds: list[ClassifierKind],
    k: int = 10,
    seed: int = 0,
    *,
    impute: str = "mode_mean",
    stratified: bool = True,
    folds: FoldAssignment | None = None,
    workers: int = 1,
) -> list[CvReport | Exception]:
    """Outer cross-validation for several classifiers sharing one fold split.

    With a fixed ``selection.evaluator`` each fold's mask is searched once
    and reused for every classifier. Imputation statistics come from the
    outer-training partition only. Returns one report (or the exception that
    stopped it) per entry of ``kinds``.
    """
    if impute == "drop_rows":
        d = impute_missing(d, "drop_rows")
        impute_in_fold = False
    elif impute == "mode_mean":
        impute_in_fold = True
    elif impute is None:
        if d.has_missing():
            raise DatasetError("dataset has missing cells and no imputation was requested")
        impute_in_fold = False
    else:
        raise DatasetError(f"unknown imputation strategy {impute!r}")
    if folds is None:
        folds = stratified_folds(d, k, seeding.derive_seed(seed, seeding.OUTER_FOLDS), stratified)
    elif folds.fold_of.size != len(d):
        raise DatasetError("fold assignment does not match the dataset")
    jobs = [(d, folds, f, selection, kinds, seed, impute_in_fold) for f in range(folds.k)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_fold = list(pool.map(_fold_job, jobs))
    else:
        per_fold = [_fold_job(j) for j in jobs]

    fingerprint = d.fingerprint()
    reports: list[CvReport | Exception] = []
    for i, kind in enumerate(kinds):
        results = [fold_out[i] for fold_out in per_fold]
        failure = next((r for r in results if isinstance(r, Exception)), None)
        if failure is not None:
            reports.append(failure)
            continue
        reports.append(
            CvReport(selection.wrapper, _kind_dict(kind), seed, folds.k, tuple(results), fingerprint,
                     selection.describe())
        )
    return reports


def outer_cv(
    d: Dataset,
    wrapper: str,
    kind: ClassifierKind,
    k: int = 10,
    seed: int = 0,
    *,
    evaluator: ClassifierKind | None = None,
    ga: GaConfig = GaConfig(),
    budget: SearchBudget = SearchBudget(),
    impute: str = "mode_mean",
    stratified: bool = True,
    folds: FoldAssignment | None = None,
    workers: int = 1,
) -> CvReport:
    """k-fold estimate of ``kind``'s accuracy on the features ``wrapper`` picks per fold.

    The wrapper only ever sees the k-1 training folds. By default it wraps
    ``kind`` itself; pass ``evaluator`` to search with another classifier.
    """
    selection = Selection(wrapper, evaluator, ga, budget)
    (report,) = run_folds(d, selection, [kind], k, seed, impute=impute, stratified=stratified,
                          folds=folds, workers=workers)
    if isinstance(report, Exception):
        raise report
    return report


# ---------------------------------------------------------------------------
# Benchmark grid

@dataclass(frozen=True)
class BenchCell:
    wrapper: str
    classifier: str
    reports: tuple[CvReport, ...] = ()
    error: str | None = None
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean([r.mean_accuracy for r in self.reports]))

    @property
    def seed_std(self) -> float:
        return float(np.std([r.mean_accuracy for r in self.reports]))

    def to_dict(self, schema=None) -> dict:
        out = {"wrapper": self.wrapper, "classifier": self.classifier, "error": self.error}
        if self.ok:
            out["mean_accuracy"] = self.mean_accuracy
            out["seed_std"] = self.seed_std
            out["reports"] = [r.to_dict(schema) for r in self.reports]
        return out


@dataclass(frozen=True)
class BenchTable:
    cells: dict  # (wrapper, classifier) -> BenchCell
    seeds: tuple[int, ...]
    config: dict
    schema: object = None

    @property
    def failed(self) -> bool:
        return any(not c.ok for c in self.cells.values())

    def cell(self, wrapper: str, classifier: str) -> BenchCell:
        return self.cells[(wrapper, classifier)]

    def rows(self) -> list[str]:
        return [w for w in WRAPPERS if any(key[0] == w for key in self.cells)]

    def columns(self) -> list[str]:
        return [c for c in CLASSIFIERS if any(key[1] == c for key in self.cells)]

    def to_json(self) -> str:
        data = {
            "format": REPORT_FORMAT,
            "config": self.config,
            "seeds": list(self.seeds),
            "cells": [self.cells[key].to_dict(self.schema) for key in self._ordered_keys()],
        }
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    def _ordered_keys(self):
        return [(w, c) for w in WRAPPERS for c in CLASSIFIERS if (w, c) in self.cells]

    def to_table(self) -> str:
        """Aligned text grid: wrapper rows by classifier columns, accuracies in percent."""
        cols = self.columns()
        header = ["Wrapper Algorithms"] + [DISPLAY_NAMES[c] for c in cols]
        lines = [header]
        for w in self.rows():
            row = [WRAPPER_LABELS[w]]
            for c in cols:
                cell = self.cells.get((w, c))
                if cell is None:
                    row.append("-")
                elif not cell.ok:
                    row.append("failed")
                else:
                    row.append(f"{100 * cell.mean_accuracy:.2f}")
            lines.append(row)
        widths = [max(len(r[i]) for r in lines) for i in range(len(header))]
        return "\n".join(
            "  ".join(v.ljust(widths[0]) if i == 0 else v.rjust(widths[i]) for i, v in enumerate(r)).rstrip()
            for r in lines
        ) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["wrapper", "classifier", "seed", "fold", "mask", "tp", "fp", "fn", "tn", "accuracy"])
        for key in self._ordered_keys():
            cell = self.cells[key]
            for report in cell.reports:
                for f in report.per_fold:
                    cm = f.confusion
                    writer.writerow([cell.wrapper, cell.classifier, report.seed, f.fold, str(f.mask),
                                     cm.tp, cm.fp, cm.fn, cm.tn, repr(f.accuracy)])
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        if fmt == "table":
            return self.to_table()
        raise ValueError(f"unknown format {fmt!r}")


def bench(
    d: Dataset,
    seeds,
    kinds: dict[str, ClassifierKind] | None = None,
    *,
    cells=None,
    k: int = 10,
    evaluator: ClassifierKind | None = NaiveBayes(),
    ga: GaConfig = GaConfig(),
    budget: SearchBudget = SearchBudget(),
    impute: str = "mode_mean",
    stratified: bool = True,
    workers: int = 1,
    progress=None,
) -> BenchTable:
    """Run the wrapper x classifier grid, one outer CV per cell and seed.

    ``kinds`` maps column names (``nb``, ``svm``, ``mlp``, ``c45``) to
    configured classifiers; ``cells`` optionally restricts the grid to a set
    of ``(wrapper, classifier)`` pairs. The wrapper searches with
    ``evaluator`` (Naive Bayes by default), so its masks are shared by every
    column of a row; ``evaluator=None`` makes each column wrap itself.
    A failing cell is recorded and does not stop the others. ``progress`` is
    called with ``(wrapper, classifier, seconds)`` as cells finish.
    """
    from .classifiers import KINDS

    kinds = kinds or {name: KINDS[name]() for name in CLASSIFIERS}
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ValueError("bench needs at least one seed")
    wanted = [(w, c) for w in WRAPPERS for c in CLASSIFIERS if c in kinds]
    if cells is not None:
        cells = set(cells)
        unknown = cells - set(wanted)
        if unknown:
            raise ValueError(f"unknown cells {sorted(unknown)}")
        wanted = [key for key in wanted if key in cells]

    results: dict = {}
    for w in WRAPPERS:
        cols = [c for (ww, c) in wanted if ww == w]
        if not cols:
            continue
        selection = Selection(w, evaluator, ga, budget)
        per_col = {c: [] for c in cols}
        errors: dict = {}
        elapsed = {c: 0.0 for c in cols}
        for seed in seeds:
            start = time.perf_counter()
            try:
                out = run_folds(d, selection, [kinds[c] for c in cols], k, seed, impute=impute,
                                stratified=stratified, workers=workers)
            except Exception as exc:
                out = [exc] * len(cols)
            share = (time.perf_counter() - start) / len(cols)
            for c, rep in zip(cols, out):
                elapsed[c] += share
                if isinstance(rep, Exception):
                    errors.setdefault(c, f"seed {seed}: {type(rep).__name__}: {rep}")
                else:
                    per_col[c].append(rep)
        for c in cols:
            if c in errors:
                cell = BenchCell(w, c, error=errors[c], seconds=elapsed[c])
            else:
                cell = BenchCell(w, c, tuple(per_col[c]), seconds=elapsed[c])
            results[(w, c)] = cell
            if progress is not None:
                progress(w, c, elapsed[c])

    config = {
        "k": k,
        "seeds": list(seeds),
        "impute": impute,
        "stratified": stratified,
        "evaluator": _kind_dict(evaluator) if evaluator else "same",
        "ga": {key: v for key, v in asdict(ga).items() if key != "seed"},
        "budget": asdict(budget),
        "classifiers": {name: _kind_dict(kind) for name, kind in kinds.items()},
        "cells": [f"{w}:{c}" for w, c in wanted],
        "dataset_fingerprint": d.fingerprint(),
    }
    return BenchTable(results, seeds, config, d.schema)
