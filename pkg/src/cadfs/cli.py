"""Command-line front end.

Subcommands: ``ingest`` (parse and summarize a dataset), ``select`` (one
wrapper run on the whole dataset) and ``bench`` (wrapper x classifier grid
under outer cross-validation).

Options can also come from ``--config FILE``, a text file of ``key = value``
lines whose keys are the long option names without the leading dashes
(``-`` or ``_`` both accepted, ``#`` starts a comment). Command-line flags
override file values.

The default dataset is ``$CADFS_DATA_DIR/processed.cleveland.data``;
relative ``--dataset`` paths missing from the working directory are also
looked up in ``$CADFS_DATA_DIR``.

Exit codes: 0 success, 1 invalid configuration, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from .classifiers import C45, MLP, SVM, NaiveBayes
from .classifiers.base import ConfigError
from .dataset import DatasetError, impute_missing, load_dataset, schema_to_text, to_csv
from .evaluation import CLASSIFIERS, WRAPPERS, bench
from .wrappers import GaConfig, SearchBudget, bfs_select, ga_select, sffs_select

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3
DATA_DIR_ENV = "CADFS_DATA_DIR"
DEFAULT_DATASET = "processed.cleveland.data"
IMPUTE_CHOICES = {"mode-mean": "mode_mean", "drop": "drop_rows"}


class UsageError(Exception):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _seed_list(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in str(text).replace(" ", "").split(",") if s]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed list {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("seed list is empty")
    return seeds


def _name_list(choices):
    def parse(text: str) -> list[str]:
        names = [n.strip() for n in str(text).split(",") if n.strip()]
        bad = [n for n in names if n not in choices]
        if bad or not names:
            raise argparse.ArgumentTypeError(f"expected a comma list from {', '.join(choices)}")
        return names
    return parse


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"invalid boolean {text!r}")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value file with default option values")
    p.add_argument("--dataset", help=f"dataset path (default: ${DATA_DIR_ENV}/{DEFAULT_DATASET})")
    p.add_argument("--impute", choices=sorted(IMPUTE_CHOICES), default="mode-mean")
    p.add_argument("--out", help="write the report here instead of stdout")


def _add_model_options(p: argparse.ArgumentParser):
    g = p.add_argument_group("genetic algorithm")
    g.add_argument("--population", type=int, default=GaConfig.population_size)
    g.add_argument("--generations", type=int, default=GaConfig.generations)
    g.add_argument("--crossover", type=float, default=GaConfig.crossover_prob)
    g.add_argument("--mutation", type=float, default=GaConfig.mutation_prob)
    g.add_argument("--fitness-folds", type=int, default=GaConfig.fitness_folds)
    g = p.add_argument_group("best-first / floating search")
    g.add_argument("--max-stale", type=int, default=SearchBudget.max_expansions_without_improvement,
                   help="BFS stops after this many expansions without a new best")
    g.add_argument("--max-evals", type=int, default=SearchBudget.max_subset_evaluations)
    g = p.add_argument_group("classifiers")
    g.add_argument("--c45-min-leaf", type=int, default=C45.min_leaf, help="M")
    g.add_argument("--c45-confidence", type=float, default=C45.confidence, help="C")
    g.add_argument("--c45-prune", type=_bool, default=True)
    g.add_argument("--svm-c", type=float, default=SVM.C)
    g.add_argument("--svm-degree", type=int, default=SVM.degree)
    g.add_argument("--svm-tol", type=float, default=SVM.tol)
    g.add_argument("--mlp-hidden", type=int, default=None)
    g.add_argument("--mlp-learning-rate", type=float, default=MLP.learning_rate)
    g.add_argument("--mlp-epochs", type=int, default=MLP.epochs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cadfs", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a dataset, print a summary, optionally write canonical CSV")
    _add_common(p)

    p = sub.add_parser("select", help="run one wrapper on the whole dataset")
    _add_common(p)
    p.add_argument("--wrapper", choices=WRAPPERS, default="ga")
    p.add_argument("--classifier", choices=CLASSIFIERS, default="nb")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "table", "csv"), default="json")
    _add_model_options(p)

    p = sub.add_parser("bench", help="wrapper x classifier accuracy grid under outer cross-validation")
    _add_common(p)
    p.add_argument("--seeds", type=_seed_list, default=[0, 1, 2, 3, 4])
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--cells", help="comma list of wrapper:classifier pairs, e.g. ga:nb,none:svm")
    p.add_argument("--wrapper", type=_name_list(WRAPPERS),
                   help="comma list restricting rows; intersected with --cells")
    p.add_argument("--classifier", type=_name_list(CLASSIFIERS), help="comma list restricting columns")
    p.add_argument("--evaluator", choices=CLASSIFIERS + ("same",), default="nb",
                   help="classifier wrapped by the search (same: each column wraps itself)")
    p.add_argument("--stratified", type=_bool, default=True)
    p.add_argument("--workers", type=int, default=1, help="processes for outer folds")
    p.add_argument("--format", choices=("json", "table", "csv"), default="table")
    _add_model_options(p)
    return parser


def read_config_file(path: str) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError([f"{path}:{lineno}: expected 'key = value'"])
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            values = read_config_file(args.config)
        except OSError as exc:
            raise UsageError([f"cannot read config file: {exc}"]) from None
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(values) - known - {"config"})
        if unknown:
            raise UsageError([f"unknown config key {k!r}" for k in unknown])
        problems = []
        for action in sub._actions:
            if action.dest in values and action.dest != "config":
                raw = values[action.dest]
                if action.choices is not None and raw not in action.choices:
                    problems.append(f"config key {action.dest!r}: {raw!r} is not one of {sorted(action.choices)}")
                action.default = raw
        if problems:
            raise UsageError(problems)
        args = parser.parse_args(argv)
    return args


def resolve_dataset(path: str | None) -> Path:
    data_dir = os.environ.get(DATA_DIR_ENV)
    if path is None:
        return Path(data_dir or ".") / DEFAULT_DATASET
    p = Path(path)
    if not p.exists() and not p.is_absolute() and data_dir and (Path(data_dir) / p).exists():
        return Path(data_dir) / p
    return p


def _kinds(args) -> tuple[dict, list[str]]:
    problems, kinds = [], {}
    specs = {
        "nb": lambda: NaiveBayes(),
        "c45": lambda: C45(args.c45_min_leaf, args.c45_confidence, args.c45_prune),
        "svm": lambda: SVM(args.svm_c, args.svm_degree, args.svm_tol),
        "mlp": lambda: MLP(args.mlp_hidden, args.mlp_learning_rate, args.mlp_epochs),
    }
    for name, build in specs.items():
        try:
            kinds[name] = build()
        except (ConfigError, ValueError) as exc:
            problems.append(str(exc))
    return kinds, problems


def _search_config(args, seed: int) -> tuple[GaConfig | None, SearchBudget | None, list[str]]:
    problems = []
    ga = budget = None
    try:
        ga = GaConfig(args.population, args.generations, args.crossover, args.mutation, seed, args.fitness_folds)
    except ValueError as exc:
        problems += str(exc).split("; ")
    if args.max_stale < 1:
        problems.append("max_expansions_without_improvement (--max-stale) must be >= 1")
    if args.max_evals < 1:
        problems.append("max_subset_evaluations (--max-evals) must be >= 1")
    if not problems:
        budget = SearchBudget(args.max_stale, args.max_evals, args.fitness_folds)
    return ga, budget, problems


def _load(args):
    path = resolve_dataset(args.dataset)
    d = load_dataset(path)
    return path, d


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_ingest(args) -> int:
    path, d = _load(args)
    incomplete = int(d.missing.any(axis=1).sum())
    neg, pos = d.class_counts()
    lines = [f"{len(d)} instances, {incomplete} with missing values",
             f"classes: {neg} negative, {pos} positive"]
    lines += [f"missing {name}: {count}" for name, count in d.missing_counts().items() if count]
    if args.impute == "drop":
        d = impute_missing(d, "drop_rows")
        lines.append(f"after dropping incomplete rows: {len(d)} instances")
    print("\n".join(lines))
    if args.out:
        Path(args.out).write_text(to_csv(d))
        Path(args.out + ".schema").write_text(schema_to_text(d.schema))
        print(f"wrote {args.out} and {args.out}.schema", file=sys.stderr)
    return EXIT_OK


def cmd_select(args) -> int:
    kinds, problems = _kinds(args)
    ga, budget, more = _search_config(args, args.seed)
    problems += more
    if problems:
        raise UsageError(problems)
    path, d = _load(args)
    d = impute_missing(d, IMPUTE_CHOICES[args.impute])
    kind = kinds[args.classifier]
    if args.wrapper == "ga":
        result = ga_select(d, kind, ga)
    elif args.wrapper == "bfs":
        result = bfs_select(d, kind, budget, args.seed)
    elif args.wrapper == "sffs":
        result = sffs_select(d, kind, args.seed, budget)
    else:
        from .dataset import FeatureMask
        from .wrappers import WrapperResult, fitness

        mask = FeatureMask.ones(d.n_features)
        f = fitness(mask, d, kind, args.fitness_folds, args.seed)
        result = WrapperResult("none", mask, f, ((f, f),), 1)
    config = {
        "command": "select",
        "dataset": str(path),
        "dataset_fingerprint": d.fingerprint(),
        "impute": args.impute,
        "wrapper": args.wrapper,
        "classifier": {"name": kind.name, **kind.params()},
        "seed": args.seed,
        "ga": {k: v for k, v in asdict(ga).items() if k != "seed"},
        "budget": asdict(budget),
    }
    report = result.to_dict(d.schema)
    report["config"] = config
    if args.format == "json":
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    elif args.format == "csv":
        text = f"# config: {json.dumps(config, sort_keys=True)}\nstep,best,mean\n" + "".join(
            f"{i},{b!r},{m!r}\n" for i, (b, m) in enumerate(result.history, start=1))
    else:
        text = (
            f"# config: {json.dumps(config, sort_keys=True)}\n"
            f"wrapper:    {result.wrapper}\n"
            f"mask:       {result.best_mask}\n"
            f"selected:   {', '.join(result.best_mask.names(d.schema))}\n"
            f"fitness:    {100 * result.best_fitness:.2f}\n"
            f"evaluated:  {result.evaluations} subsets\n"
        )
    _emit(text, args.out)
    return EXIT_OK


def _parse_cells(text: str | None) -> list[tuple[str, str]] | None:
    if not text:
        return None
    cells, problems = [], []
    for item in text.split(","):
        w, sep, c = item.strip().partition(":")
        if not sep or w not in WRAPPERS or c not in CLASSIFIERS:
            problems.append(f"invalid cell {item.strip()!r} (expected wrapper:classifier, "
                            f"wrappers {'/'.join(WRAPPERS)}, classifiers {'/'.join(CLASSIFIERS)})")
        else:
            cells.append((w, c))
    if problems:
        raise UsageError(problems)
    return cells


def cmd_bench(args) -> int:
    kinds, problems = _kinds(args)
    ga, budget, more = _search_config(args, 0)
    problems += more
    if args.folds < 2:
        problems.append("folds must be >= 2")
    if args.workers < 1:
        problems.append("workers must be >= 1")
    if any(s < 0 for s in args.seeds):
        problems.append("seeds must be non-negative")
    try:
        cells = _parse_cells(args.cells)
    except UsageError as exc:
        problems += exc.problems
        cells = None
    if problems:
        raise UsageError(problems)
    grid = [(w, c) for w in WRAPPERS for c in CLASSIFIERS]
    if cells is not None:
        grid = [key for key in grid if key in set(cells)]
    if args.wrapper:
        grid = [key for key in grid if key[0] in args.wrapper]
    if args.classifier:
        grid = [key for key in grid if key[1] in args.classifier]
    if not grid:
        raise UsageError(["the requested cell filters select no cells"])

    path, d = _load(args)
    evaluator = None if args.evaluator == "same" else kinds[args.evaluator]

    def progress(w, c, seconds):
        print(f"{w}:{c} {seconds:.1f}s", file=sys.stderr)

    table = bench(
        d, args.seeds, {c: kinds[c] for c in CLASSIFIERS if any(key[1] == c for key in grid)},
        cells=grid, k=args.folds, evaluator=evaluator, ga=ga, budget=budget,
        impute=IMPUTE_CHOICES[args.impute], stratified=args.stratified, workers=args.workers,
        progress=progress,
    )
    table.config["dataset"] = str(path)
    table.config["command"] = "bench"
    for key, cell in table.cells.items():
        if not cell.ok:
            print(f"cell {key[0]}:{key[1]} failed: {cell.error}", file=sys.stderr)
    text = table.render(args.format)
    if args.format != "json":
        text = f"# config: {json.dumps(table.config, sort_keys=True)}\n" + text
    _emit(text, args.out)
    return EXIT_RUNTIME if table.failed else EXIT_OK


COMMANDS = {"ingest": cmd_ingest, "select": cmd_select, "bench": cmd_bench}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
