"""Command-line interface.

Subcommands:
  run      full seven-phase pipeline: report bundle, model file, gate verdict
  train    phases 1-6 only (no gate verdict)
  check    evaluate a constraints file against a CSV
  stats    descriptive statistics for a CSV
  predict  score an input CSV with a saved model

Exit codes: 0 success (gates passed), 2 gate failure, 3 constraint abort,
1 operational error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .constraints import ConstraintSyntaxError, parse
from .pipeline import run as run_pipeline
from .pipeline import load_model
from .report import emit_report, report_to_markdown
from .tabular import (
    MISSING,
    StructuralError,
    UnknownFeatureError,
    descriptive_stats,
    load_csv,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_GATES_FAILED = 2
EXIT_CONSTRAINT_ABORT = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmml", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute the full pipeline from a config file")
    run_p.add_argument("--config", required=True, help="pipeline config JSON")
    run_p.add_argument("--seed", type=int, default=None, help="override the configured seed")
    run_p.add_argument("--format", choices=("json", "markdown"), default=None,
                       help="restrict report output to one format (default: both)")
    run_p.add_argument("--out", default=None, help="report directory (default: config report.dir)")

    train_p = sub.add_parser("train", help="run phases 1-6 and persist the best model")
    train_p.add_argument("--config", required=True)
    train_p.add_argument("--seed", type=int, default=None)
    train_p.add_argument("--format", choices=("json", "markdown"), default=None)
    train_p.add_argument("--out", default=None)

    check_p = sub.add_parser("check", help="evaluate a constraints file against a CSV")
    check_p.add_argument("--data", required=True, help="CSV file")
    check_p.add_argument("--constraints", required=True, help="constraints (.cmc) file")
    check_p.add_argument("--format", choices=("json", "markdown"), default="json")

    stats_p = sub.add_parser("stats", help="descriptive statistics for a CSV")
    stats_p.add_argument("--data", required=True)
    stats_p.add_argument("--format", choices=("json", "markdown"), default="json")

    predict_p = sub.add_parser("predict", help="score an input CSV with a saved model")
    predict_p.add_argument("--model", required=True, help="model JSON written by run/train")
    predict_p.add_argument("--input", required=True, help="input CSV")
    predict_p.add_argument("--output", required=True, help="predictions CSV to write")
    return parser


def _cmd_run(args, train_only: bool) -> int:
    config = load_config(args.config)
    report = run_pipeline(config, seed_override=args.seed, train_only=train_only)
    formats = (args.format,) if args.format else ("json", "markdown")
    directory = args.out or config.resolve_path(config.report.directory)
    paths = emit_report(report, directory, formats=formats, figures=config.report.figures)
    for name in ("json", "markdown", "model", "leaderboard"):
        if name in paths:
            print(f"{name}: {paths[name]}")
    if report.aborted:
        print("run aborted on hard constraint failures", file=sys.stderr)
        return EXIT_CONSTRAINT_ABORT
    if not train_only and report.gates_passed is False:
        print(f"gate check failed: {report.gates.get('verdict')}", file=sys.stderr)
        return EXIT_GATES_FAILED
    return EXIT_OK


def _cmd_check(args) -> int:
    dataset = load_csv(args.data)
    with open(args.constraints, encoding="utf-8") as fh:
        doc = parse(fh.read())
    from .constraints import evaluate

    report = evaluate(doc, dataset)
    rows = [
        {
            "name": r.name,
            "kind": r.kind,
            "status": r.status,
            "violating_row_count": len(r.violating_row_indices),
            "violating_rows": list(r.violating_row_indices),
            "skipped_rows": r.skipped_row_count,
            "observed": r.observed,
        }
        for r in report.results
    ]
    if args.format == "json":
        print(json.dumps({"statements": rows}, indent=2, sort_keys=True))
    else:
        print("| Name | Kind | Status | Violations | Skipped |")
        print("| --- | --- | --- | --- | --- |")
        for r in rows:
            print(
                f"| {r['name']} | {r['kind']} | {r['status']} "
                f"| {r['violating_row_count']} | {r['skipped_rows']} |"
            )
    return EXIT_CONSTRAINT_ABORT if report.failed else EXIT_OK


def _cmd_stats(args) -> int:
    dataset = load_csv(args.data)
    stats = descriptive_stats(dataset)
    if args.format == "json":
        payload = {
            fs.name: {
                "count": fs.count,
                "present": fs.n_present,
                "missing_fraction": fs.missing_fraction,
                "mean": fs.mean,
                "std": fs.std,
                "min": fs.min,
                "q25": fs.q25,
                "median": fs.median,
                "q75": fs.q75,
                "max": fs.max,
            }
            for fs in stats.per_feature
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print("| Feature | count | mean | std | min | 25% | 50% | 75% | max |")
        print("| --- | --- | --- | --- | --- | --- | --- | --- | --- |")
        for fs in stats.per_feature:
            cells = [
                fs.name, fs.count,
                *(("—" if v is None else f"{v:.2f}") for v in
                  (fs.mean, fs.std, fs.min, fs.q25, fs.median, fs.q75, fs.max)),
            ]
            print("| " + " | ".join(str(c) for c in cells) + " |")
    return EXIT_OK


def _cmd_predict(args) -> int:
    loaded = load_model(args.model)
    dataset = load_csv(args.input)
    predictions, probabilities = loaded.predict_dataset(dataset)

    with open(args.input, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        input_rows = list(reader)
    out_header = header + ["prediction"]
    if probabilities is not None:
        out_header.append("probability")
    out_path = Path(args.output)
    if out_path.parent != Path(""):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(out_header)
        for i, row in enumerate(input_rows):
            extra = [_format_prediction(predictions[i])]
            if probabilities is not None:
                extra.append(repr(float(probabilities[i])))
            writer.writerow(row + extra)
    print(f"wrote {len(input_rows)} predictions to {args.output}")
    return EXIT_OK


def _format_prediction(value) -> str:
    f = float(value)
    return str(int(f)) if f == int(f) else repr(f)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args, train_only=False)
        if args.command == "train":
            return _cmd_run(args, train_only=True)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "stats":
            return _cmd_stats(args)
        if args.command == "predict":
            return _cmd_predict(args)
        raise AssertionError(f"unhandled command {args.command}")
    except (ConfigError, ConstraintSyntaxError, StructuralError, UnknownFeatureError,
            FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
