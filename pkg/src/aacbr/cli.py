"""Command-line interface: ``aacbr train|predict|explain|graph|experiment``.

Exit status is 0 on success, 2 on bad usage and 1 on data or validation
errors (the message names the error category).
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from aacbr import engine
from aacbr.af import to_dot
from aacbr.casebase import STRATEGIES
from aacbr.datasets import (
    COMPAS_FEATURE_SETS,
    encode_rows,
    ingest_compas,
    ingest_welfare,
    load_csv,
    select_feature_set,
)
from aacbr.dtree import TreeParams
from aacbr.errors import AacbrError
from aacbr.experiments import MODEL_KINDS, dumps_report, format_report, run_experiment
from aacbr.explain import (
    adt_metrics,
    adt_to_dot,
    adt_to_text,
    decision_path,
    explain_prediction,
    prediction_labeller,
)

log = logging.getLogger("aacbr")

SEED_ENV = "AACBR_SEED"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"aacbr: {SEED_ENV} must be an integer, got {raw!r}") from None


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _read_rows(model: engine.Model, path) -> tuple[pd.DataFrame, np.ndarray]:
    df = pd.read_csv(path, encoding="utf-8")
    if model.encoding:
        return df, encode_rows(df, model.encoding, Path(path).name)
    names = list(model.tree.feature_names)
    missing = [n for n in names if n not in df.columns]
    if missing:
        raise AacbrError(f"{path}: missing feature columns {missing}")
    return df, df[names].to_numpy(dtype=float)


def cmd_train(args) -> int:
    ds = load_csv(args.data, args.label_col)
    params = TreeParams(args.max_depth, args.max_leaves)
    model = engine.fit(
        args.variant,
        ds.X,
        ds.y,
        params,
        args.strategy,
        default_outcome=args.default_outcome,
        feature_names=ds.feature_names,
        seed=args.seed,
    )
    model = engine.Model(
        model.variant, model.strategy, model.params, model.tree, model.casebase, args.seed, model.order_policy,
        ds.encoding,
    )
    engine.save_model(model, args.out)
    log.info(
        "wrote %s: %d cases, %d predicates, %d arguments after spike removal",
        args.out, len(model.casebase), len(model.vocabulary), engine.model_size(model),
    )
    return 0


def cmd_predict(args) -> int:
    model = engine.load_model(args.model)
    _, X = _read_rows(model, args.data)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["row", "prediction"])
        for i, label in enumerate(model.predict_many(X)):
            writer.writerow([i, label])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _row(model, args) -> np.ndarray:
    _, X = _read_rows(model, args.data)
    if not 0 <= args.row < len(X):
        raise AacbrError(f"row {args.row} out of range (file has {len(X)} rows)")
    return X[args.row]


def cmd_explain(args) -> int:
    model = engine.load_model(args.model)
    row = _row(model, args)
    if args.explainer == "path":
        path = decision_path(model.tree, row)
        if args.format == "dot":
            lines = ["digraph Path {"]
            for i, (p, ok) in enumerate(path.steps):
                lines.append(f'  n{i} [label="{p}"];')
                lines.append(f'  n{i} -> n{i + 1} [label="{"true" if ok else "false"}"];')
            lines.append(f'  n{len(path.steps)} [label="{path.leaf.label}", shape=box];')
            lines.append("}")
            sys.stdout.write("\n".join(lines) + "\n")
        else:
            sys.stdout.write(path.to_text())
        metrics = path.metrics
    else:
        prediction = engine.predict(model, row)
        adt = explain_prediction(prediction)
        label = prediction_labeller(model, prediction)
        sys.stdout.write(adt_to_dot(adt, label) if args.format == "dot" else adt_to_text(adt, label))
        metrics = adt_metrics(adt)
    if args.metrics:
        print(f"depth={metrics.depth} nodes={metrics.node_count} unique={metrics.unique_argument_count}")
    return 0


def cmd_graph(args) -> int:
    model = engine.load_model(args.model)
    if args.data is not None:
        prediction = engine.predict(model, _row(model, args))
        af = prediction.af
        label = prediction_labeller(model, prediction)
    else:
        af = model.af_d
        label = lambda a: engine.argument_label(model, a)
    if args.remove_spikes:
        af = engine.remove_spikes(af)
    sys.stdout.write(to_dot(af, label))
    return 0


def _experiment_dataset(args):
    if args.dataset == "compas":
        ds = ingest_compas(args.data)
        return select_feature_set(ds, args.feature_set)
    if args.dataset == "welfare":
        return ingest_welfare(args.data, args.label_col or "eligible")
    return load_csv(args.data, args.label_col)


def cmd_experiment(args) -> int:
    ds = _experiment_dataset(args)
    report = run_experiment(
        ds,
        models=args.models,
        strategies=args.strategies,
        folds=args.folds,
        seed=args.seed,
        sweep=args.sweep,
        cv=not args.no_cv,
        explain=not args.no_explain,
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.name or ds.name
    (out / f"{stem}.json").write_text(dumps_report(report), encoding="utf-8")
    text = format_report(report)
    (out / f"{stem}.txt").write_text(text, encoding="utf-8")
    if not args.quiet:
        sys.stdout.write(text)
    return 0


def _csv_list(choices):
    def parse(text):
        items = [t.strip() for t in text.split(",") if t.strip()]
        bad = [t for t in items if t not in choices]
        if bad or not items:
            raise argparse.ArgumentTypeError(f"expected a comma-separated subset of {','.join(choices)}")
        return tuple(items)

    return parse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    noise = common.add_mutually_exclusive_group()
    noise.add_argument("-q", "--quiet", action="store_true", help="only report errors")
    noise.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="aacbr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="fit a model and write the model document")
    p.add_argument("--data", required=True, help="training CSV (header row required)")
    p.add_argument("--label-col", help="label column (default: last column)")
    p.add_argument("--variant", choices=("regular", "cumulative"), default="regular")
    p.add_argument("--strategy", choices=STRATEGIES, default="majority")
    p.add_argument("--max-depth", type=_positive, default=5)
    p.add_argument("--max-leaves", type=_positive, default=32)
    p.add_argument("--default-outcome", default="auto", help="'auto' (majority class) or a label")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", default="model.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="classify the rows of a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("explain", parents=[common], help="explain the prediction for one row")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--row", type=int, default=0, help="0-based row index in --data")
    p.add_argument("--format", choices=("text", "dot"), default="text")
    p.add_argument("--explainer", choices=("adt", "path"), default="adt",
                   help="minimal dispute tree, or the decision path of the underlying tree")
    p.add_argument("--metrics", action="store_true", help="print depth, node and unique-argument counts")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("graph", parents=[common], help="DOT export of AF(D), or AF(D,N) with --data/--row")
    p.add_argument("--model", required=True)
    p.add_argument("--data")
    p.add_argument("--row", type=int, default=0)
    p.add_argument("--remove-spikes", action="store_true")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("experiment", parents=[common], help="cross-validation and strategy sweep")
    p.add_argument("--dataset", choices=("compas", "welfare", "csv"), default="csv")
    p.add_argument("--data", required=True)
    p.add_argument("--label-col")
    p.add_argument("--feature-set", choices=sorted(COMPAS_FEATURE_SETS), default="C")
    p.add_argument("--models", type=_csv_list(MODEL_KINDS), default=MODEL_KINDS)
    p.add_argument("--strategies", type=_csv_list(STRATEGIES), default=("majority",))
    p.add_argument("--folds", type=_positive, default=5)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--sweep", action="store_true", help="also run the per-strategy grid sweep")
    p.add_argument("--no-cv", action="store_true", help="skip cross-validation")
    p.add_argument("--no-explain", action="store_true", help="skip explanation-size metrics")
    p.add_argument("--out-dir", default="reports")
    p.add_argument("--name", help="report file stem (default: dataset name)")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.quiet else logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except AacbrError as exc:
        print(f"aacbr: {exc.category}: {exc}", file=sys.stderr)
    except (FileNotFoundError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        print(f"aacbr: input error: {exc}", file=sys.stderr)
    except ValueError as exc:
        print(f"aacbr: validation error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
