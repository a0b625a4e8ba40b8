"""Cross-validated comparison of decision trees and AA-CBR variants.

Randomness comes from one master seed. Each consumer draws its own
generator from ``numpy.random.default_rng([seed, stream, index])``:

* stream 0: the outer stratified folds,
* stream 1, index k: the inner train/validation split of fold k,
* stream 2: the single train/test split of the strategy sweep.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from aacbr import engine
from aacbr.casebase import STRATEGIES
from aacbr.datasets import Dataset
from aacbr.dtree import DecisionTree, TreeParams, grow, majority_label, tree_node_count, tree_predict_many
from aacbr.errors import DegenerateFoldError, ExplanationError
from aacbr.explain import adt_metrics, decision_path, minimal_adt

log = logging.getLogger(__name__)

GRID_DEPTHS = (3, 5, 7, 9, 11, 13)
GRID_LEAVES = (4, 8, 16, 32, 64, 128, 256, 512)
# depth-major, ascending: the first best point is the smallest depth, then fewest leaves
GRID = tuple(TreeParams(d, n) for d in GRID_DEPTHS for n in GRID_LEAVES)

MODEL_KINDS = ("dtree", "regular", "cumulative")
MODEL_TITLES = {"dtree": "Decision tree", "regular": "AA-CBR", "cumulative": "cAA-CBR"}
INNER_VALIDATION = 0.2
SWEEP_TEST = 0.2


def accuracy(predictions, labels) -> float:
    """Percentage of predictions equal to the labels."""
    predictions, labels = list(predictions), list(labels)
    if len(predictions) != len(labels):
        raise ValueError(f"{len(predictions)} predictions for {len(labels)} labels")
    if not labels:
        raise ValueError("accuracy of an empty prediction set")
    return 100.0 * sum(p == t for p, t in zip(predictions, labels)) / len(labels)


def mean_std(values) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for fewer than two values)."""
    values = [float(v) for v in values]
    if not values:
        return (math.nan, math.nan)
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return mean, std


def stratified_folds(y, folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Test-index arrays of a stratified k-fold partition."""
    y = np.asarray(y)
    counts = {label: int((y == label).sum()) for label in np.unique(y)}
    if folds < 2 or folds > len(y):
        raise DegenerateFoldError(f"cannot make {folds} folds from {len(y)} rows")
    if len(counts) > 1 and min(counts.values()) < folds:
        raise DegenerateFoldError(f"a class has fewer rows than folds: {counts}")
    buckets = [[] for _ in range(folds)]
    offset = 0
    for label in sorted(counts):
        idx = rng.permutation(np.flatnonzero(y == label))
        for j, i in enumerate(idx):
            buckets[(offset + j) % folds].append(int(i))
        offset += len(idx)
    return [np.array(sorted(b), dtype=np.int64) for b in buckets]


def stratified_split(y, fraction: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """(train, held_out) index arrays with about ``fraction`` of each class held out."""
    y = np.asarray(y)
    if len(y) < 2:
        raise DegenerateFoldError(f"cannot split {len(y)} rows")
    held = []
    pools = {}
    for label in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == label))
        k = int(round(fraction * len(idx)))
        k = min(k, len(idx) - 1) if len(idx) > 1 else 0
        held.extend(idx[:k].tolist())
        pools[label] = idx[k:]
    if not held:
        biggest = max(sorted(pools), key=lambda lb: len(pools[lb]))
        held.append(int(pools[biggest][0]))
    held_set = set(held)
    train = np.array(sorted(i for i in range(len(y)) if i not in held_set), dtype=np.int64)
    return train, np.array(sorted(held), dtype=np.int64)


class _Fitter:
    """Fits any model kind, sharing trees and models across identical grid points."""

    def __init__(self, X, y, feature_names, kind: str, strategy: str):
        self.X, self.y = X, y
        self.names = feature_names
        self.kind = kind
        self.strategy = strategy
        self.default = majority_label(list(y))
        self._trees: dict = {}
        self._models: dict = {}

    def tree(self, params: TreeParams) -> DecisionTree:
        if params not in self._trees:
            self._trees[params] = grow(self.X, self.y, params, self.default, self.names)
        return self._trees[params]

    def fit(self, params: TreeParams):
        tree = self.tree(params)
        if self.kind == "dtree":
            return tree
        if tree not in self._models:
            self._models[tree] = engine.fit(
                self.kind, self.X, self.y, params, self.strategy, default_outcome=self.default, tree=tree
            )
        return self._models[tree]


def predict_with(fitted, X) -> list[str]:
    if isinstance(fitted, DecisionTree):
        return tree_predict_many(fitted, X)
    return fitted.predict_many(X)


def size_of(fitted) -> int:
    if isinstance(fitted, DecisionTree):
        return tree_node_count(fitted)[0]
    return engine.model_size(fitted)


def explanation_metrics(fitted, X) -> tuple[tuple[float, float, float], int]:
    """Mean (depth, nodes, unique) of local explanations, and how many rows had none."""
    rows = []
    skipped = 0
    if isinstance(fitted, DecisionTree):
        rows = [decision_path(fitted, r).metrics.as_tuple() for r in np.asarray(X, dtype=float)]
    else:
        cache: dict = {}
        for r in np.asarray(X, dtype=float):
            char = fitted.characterise(r)
            if char not in cache:
                p = engine.focused_prediction(fitted, char)
                try:
                    cache[char] = adt_metrics(minimal_adt(p.af, p.grounded)).as_tuple()
                except ExplanationError:
                    cache[char] = None
            if cache[char] is None:
                skipped += 1
            else:
                rows.append(cache[char])
    if not rows:
        return (math.nan, math.nan, math.nan), skipped
    means = np.mean(np.array(rows, dtype=float), axis=0)
    return (float(means[0]), float(means[1]), float(means[2])), skipped


def grid_search(X, y, feature_names, kind: str, strategy: str, grid, rng) -> tuple[TreeParams, float]:
    """Pick the grid point with the best accuracy on one stratified validation split."""
    train, valid = stratified_split(y, INNER_VALIDATION, rng)
    fitter = _Fitter(X[train], y[train], feature_names, kind, strategy)
    best, best_acc = None, -1.0
    for params in grid:
        acc = accuracy(predict_with(fitter.fit(params), X[valid]), y[valid])
        if acc > best_acc:
            best, best_acc = params, acc
    return best, best_acc


@dataclass
class FoldResult:
    fold: int
    params: dict
    validation_accuracy: float
    accuracy: float
    size: int
    explanation: tuple
    unexplained: int
    n_test: int


@dataclass
class CvReport:
    dataset: str
    kind: str
    strategy: str | None
    folds: int
    seed: int
    inner_validation: float
    fold_results: list = field(default_factory=list)
    predictions: list = field(default_factory=list, repr=False)

    @property
    def accuracies(self) -> list[float]:
        return [f.accuracy for f in self.fold_results]

    @property
    def accuracy(self) -> tuple[float, float]:
        return mean_std(self.accuracies)

    @property
    def size(self) -> tuple[float, float]:
        return mean_std([f.size for f in self.fold_results])

    def explanation(self) -> list[tuple[float, float]]:
        per_fold = [f.explanation for f in self.fold_results if not any(math.isnan(v) for v in f.explanation)]
        return [mean_std([e[k] for e in per_fold]) for k in range(3)]

    def to_dict(self) -> dict:
        acc, size = self.accuracy, self.size
        expl = self.explanation()
        return {
            "dataset": self.dataset,
            "model": self.kind,
            "strategy": self.strategy,
            "folds": self.folds,
            "seed": self.seed,
            "inner_validation": self.inner_validation,
            "accuracy": {"mean": acc[0], "std": acc[1]},
            "size": {"mean": size[0], "std": size[1]},
            "explanation": {
                name: {"mean": m, "std": s} for name, (m, s) in zip(("depth", "nodes", "unique"), expl)
            },
            "fold_results": [asdict(f) for f in self.fold_results],
        }


def run_cv(
    ds: Dataset,
    kind: str,
    strategy: str | None = "majority",
    folds: int = 5,
    seed: int = 0,
    grid=GRID,
    explain: bool = True,
) -> CvReport:
    """Outer stratified k-fold with an inner validation split for hyperparameters."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    if kind == "dtree":
        strategy = None
    elif strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    X, y = ds.X, np.asarray(ds.y)
    test_sets = stratified_folds(y, folds, np.random.default_rng([seed, 0]))
    report = CvReport(ds.name, kind, strategy, folds, seed, INNER_VALIDATION)
    predictions = np.empty(len(y), dtype=object)
    for k, test in enumerate(test_sets):
        started = time.perf_counter()
        train = np.setdiff1d(np.arange(len(y)), test)
        params, val_acc = grid_search(
            X[train], y[train], ds.feature_names, kind, strategy, grid, np.random.default_rng([seed, 1, k])
        )
        fitted = _Fitter(X[train], y[train], ds.feature_names, kind, strategy).fit(params)
        pred = predict_with(fitted, X[test])
        predictions[test] = pred
        if explain:
            expl, skipped = explanation_metrics(fitted, X[test])
        else:
            expl, skipped = (math.nan, math.nan, math.nan), 0
        report.fold_results.append(
            FoldResult(
                k,
                {"max_depth": params.max_depth, "max_leaf_nodes": params.max_leaf_nodes},
                val_acc,
                accuracy(pred, y[test]),
                size_of(fitted),
                expl,
                skipped,
                len(test),
            )
        )
        log.info(
            "%s %s/%s fold %d: acc %.2f params %s (%.1fs)",
            ds.name, kind, strategy, k, report.fold_results[-1].accuracy, params, time.perf_counter() - started,
        )
    report.predictions = predictions.tolist()
    return report


def _stats(values) -> dict:
    mean, std = mean_std(values)
    return {"min": float(min(values)), "max": float(max(values)), "mean": mean, "std": std}


def strategy_sweep(ds: Dataset, kind: str, grid=GRID, strategies=STRATEGIES, seed: int = 0) -> dict:
    """Test accuracy of every grid point under every strategy on one fixed split.

    Also aggregates, per grid point, the accuracy difference of each strategy
    against the baseline (``keep`` when swept, else the first strategy).
    """
    if kind not in ("regular", "cumulative"):
        raise ValueError("the strategy sweep applies to AA-CBR models only")
    X, y = ds.X, np.asarray(ds.y)
    train, test = stratified_split(y, SWEEP_TEST, np.random.default_rng([seed, 2]))
    per_strategy = {}
    for strategy in strategies:
        fitter = _Fitter(X[train], y[train], ds.feature_names, kind, strategy)
        per_strategy[strategy] = [accuracy(predict_with(fitter.fit(p), X[test]), y[test]) for p in grid]
    baseline = "keep" if "keep" in strategies else strategies[0]
    deltas = {
        f"{s}-{baseline}": _stats([a - b for a, b in zip(per_strategy[s], per_strategy[baseline])])
        for s in strategies
        if s != baseline
    }
    return {
        "dataset": ds.name,
        "model": kind,
        "seed": seed,
        "test_fraction": SWEEP_TEST,
        "grid": [[p.max_depth, p.max_leaf_nodes] for p in grid],
        "accuracy": {s: _stats(v) for s, v in per_strategy.items()},
        "per_point": per_strategy,
        "deltas": deltas,
    }


def run_experiment(
    ds: Dataset,
    models=MODEL_KINDS,
    strategies=("majority",),
    folds: int = 5,
    seed: int = 0,
    sweep: bool = False,
    cv: bool = True,
    grid=GRID,
    explain: bool = True,
) -> dict:
    report = {
        "dataset": ds.name,
        "rows": len(ds),
        "features": list(ds.feature_names),
        "class_counts": ds.class_counts(),
        "seed": seed,
        "folds": folds,
        "grid": {"max_depth": list(GRID_DEPTHS), "max_leaf_nodes": list(GRID_LEAVES)} if grid is GRID else [
            [p.max_depth, p.max_leaf_nodes] for p in grid
        ],
        "cv": [],
        "agreement": {},
        "sweep": [],
    }
    if cv:
        runs = {}
        for kind in models:
            for strategy in ([None] if kind == "dtree" else strategies):
                r = run_cv(ds, kind, strategy, folds, seed, grid, explain)
                runs[kind, strategy] = r
                report["cv"].append(r.to_dict())
        for strategy in strategies:
            a, b = runs.get(("regular", strategy)), runs.get(("cumulative", strategy))
            if a is not None and b is not None:
                same = sum(x == z for x, z in zip(a.predictions, b.predictions))
                report["agreement"][strategy] = same / len(a.predictions)
    if sweep:
        for kind in models:
            if kind != "dtree":
                report["sweep"].append(strategy_sweep(ds, kind, grid, STRATEGIES, seed))
    return report


def _pm(mean: float, std: float, digits: int = 2) -> str:
    if math.isnan(mean):
        return "n/a"
    return f"{mean:.{digits}f}±{std:.{digits}f}"


def _table(header, rows) -> str:
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    fmt = lambda r: "  ".join(str(c).ljust(w) if i == 0 else str(c).rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
    return "\n".join([fmt(header), "  ".join("-" * w for w in widths)] + [fmt(r) for r in rows])


def format_report(report: dict) -> str:
    out = [f"dataset: {report['dataset']}  rows: {report['rows']}  seed: {report['seed']}  folds: {report['folds']}", ""]
    if report["cv"]:
        rows = []
        for r in report["cv"]:
            name = MODEL_TITLES[r["model"]] + ("" if r["strategy"] is None else f" ({r['strategy']})")
            e = r["explanation"]
            rows.append([
                name,
                _pm(r["accuracy"]["mean"], r["accuracy"]["std"]),
                _pm(r["size"]["mean"], r["size"]["std"], 1),
                _pm(e["depth"]["mean"], e["depth"]["std"], 1),
                _pm(e["nodes"]["mean"], e["nodes"]["std"], 1),
                _pm(e["unique"]["mean"], e["unique"]["std"], 1),
            ])
        out.append("Cross-validated accuracy (%), model size and local explanation size")
        out.append(_table(["model", "accuracy", "size", "expl. depth", "expl. nodes", "expl. unique"], rows))
        out.append("")
        if report["agreement"]:
            for s, frac in sorted(report["agreement"].items()):
                out.append(f"AA-CBR / cAA-CBR test prediction agreement ({s}): {100 * frac:.2f}%")
            out.append("")
    for sw in report["sweep"]:
        strategies = list(sw["accuracy"])
        out.append(f"{MODEL_TITLES[sw['model']]}: test accuracy (%) over the grid, by strategy")
        rows = [[stat] + [f"{sw['accuracy'][s][stat]:.1f}" for s in strategies] for stat in ("min", "max")]
        rows.append(["avg±stddev"] + [_pm(sw["accuracy"][s]["mean"], sw["accuracy"][s]["std"], 1) for s in strategies])
        out.append(_table([""] + strategies, rows))
        out.append("")
        if sw["deltas"]:
            names = list(sw["deltas"])
            rows = [[stat] + [f"{sw['deltas'][n][stat]:.1f}" for n in names] for stat in ("min", "max")]
            rows.append(["mean±stddev"] + [_pm(sw["deltas"][n]["mean"], sw["deltas"][n]["std"], 1) for n in names])
            out.append(f"{MODEL_TITLES[sw['model']]}: per-grid-point accuracy difference")
            out.append(_table([""] + names, rows))
            out.append("")
    return "\n".join(out).rstrip() + "\n"


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=True) + "\n"
