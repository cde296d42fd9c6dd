"""Seven-phase pipeline orchestration.

Phases run in a fixed order: problem understanding, data collection, data
engineering, model training, model optimization, model integration, and
analytical decision making. Constraints are evaluated twice during data
engineering: once against the data as collected (the audit that surfaces
zero-value violations) and once after the declared zero-as-missing repair;
only post-repair hard failures abort a run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import ConfigError, PipelineConfig
from .constraints import (
    ConstraintDoc,
    RangeStmt,
    ViolationReport,
    evaluate,
    parse,
    quality_scorecard,
)
from .engineering import EngineeringRecipe, FittedRecipe, RecipeStep, fit_recipe
from .evaluation import (
    FittedModel,
    GateOutcome,
    GridResult,
    MetricSet,
    ModelSpec,
    fit_model,
    gate_check,
    grid_search,
)
from .learners import model_from_dict, model_to_dict
from .tabular import Dataset, descriptive_stats, load_csv, mark_missing_zeros

PHASES = (
    "problem_understanding",
    "data_collection",
    "data_engineering",
    "model_training",
    "model_optimization",
    "model_integration",
    "analytical_decision_making",
)


class ConstraintAbort(RuntimeError):
    """Hard constraint failures stopped the run before training."""


@dataclass
class PhaseLog:
    name: str
    status: str = "ok"  # ok | warn | fail | skipped
    notes: list[str] = field(default_factory=list)


@dataclass
class RunReport:
    """Everything a run produced, in phase order."""

    phases: list[PhaseLog] = field(default_factory=list)
    problem: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    constraints: dict = field(default_factory=dict)
    scorecard: dict = field(default_factory=dict)
    engineering: dict = field(default_factory=dict)
    leaderboard: list = field(default_factory=list)
    selection: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    gates: dict = field(default_factory=dict)
    environment: dict = field(default_factory=dict)
    aborted: bool = False
    gates_passed: Optional[bool] = None
    # the persisted-model document; written to disk by the report writer,
    # deliberately kept out of the report JSON itself
    model_envelope: Optional[dict] = None
    # repaired dataset, retained for figure rendering only
    marked_dataset: Optional[Dataset] = None

    def phase(self, name: str) -> PhaseLog:
        log = PhaseLog(name)
        self.phases.append(log)
        return log


def _violation_report_dict(report: ViolationReport) -> list[dict]:
    out = []
    for r in report.results:
        entry = {
            "name": r.name,
            "kind": r.kind,
            "status": r.status,
            "violating_row_count": len(r.violating_row_indices),
            "violating_rows": list(r.violating_row_indices),
            "skipped_rows": r.skipped_row_count,
        }
        if r.kind == "invariant":
            entry["observed"] = r.observed
        out.append(entry)
    return out


def _stats_dict(d: Dataset) -> dict:
    stats = descriptive_stats(d)
    out = {}
    for fs in stats.per_feature:
        out[fs.name] = {
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
    return out


def _metricset_dict(ms) -> dict:
    return ms.to_dict()


def run(config: PipelineConfig, seed_override: Optional[int] = None, train_only: bool = False) -> RunReport:
    """Execute the pipeline. ``train_only`` stops after model integration.

    Raises ConfigError for invalid setups (including an empty model grid,
    caught before any training happens). A hard constraint failure marks the
    report aborted instead of raising.
    """
    seed = config.seed(seed_override)
    report = RunReport()
    report.environment = {
        "seed": seed,
        "config_hash": config.hash(),
        "package_version": __version__,
    }

    # 1. problem understanding: echo the shared framing verbatim
    log = report.phase("problem_understanding")
    report.problem = {
        "title": config.problem.title,
        "goals": list(config.problem.goals),
        "actors": list(config.problem.actors),
        "soft_goals": list(config.problem.soft_goals),
        "dependencies": list(config.problem.dependencies),
    }
    if not config.problem.title:
        log.notes.append("no problem title declared")

    # 2. data collection: ingest, summarize, apply the zero-as-missing repair
    log = report.phase("data_collection")
    csv_path = config.resolve_path(config.data.csv_path)
    raw = load_csv(csv_path)
    if not raw.has_feature(config.data.target):
        raise ConfigError(f"target feature {config.data.target!r} not in {csv_path}")
    raw = raw.set_role(config.data.target, "target")
    target_meta = raw.feature(config.data.target)
    if target_meta.kind != "binary":
        raise ConfigError(
            f"target {config.data.target!r} must be binary for classification, is {target_meta.kind}"
        )
    marked = mark_missing_zeros(raw, config.data.zero_as_missing)
    report.marked_dataset = marked
    report.data = {
        "csv": config.data.csv_path,
        "n_rows": raw.n_rows,
        "n_features": len(raw.features),
        "target": config.data.target,
        "zero_as_missing": list(config.data.zero_as_missing),
        "descriptive_stats": _stats_dict(raw),
        "missing_fractions_after_repair": {
            f.name: marked.missing_fraction(f.name) for f in marked.features
        },
    }
    log.notes.append(f"loaded {raw.n_rows} rows, {len(raw.features)} features")

    # 3. data engineering: constraints, quality scorecard, recipe
    log = report.phase("data_engineering")
    doc: Optional[ConstraintDoc] = None
    post_repair = None
    if config.constraints_path:
        with open(config.resolve_path(config.constraints_path), encoding="utf-8") as fh:
            doc = parse(fh.read())
        raw_audit = evaluate(doc, raw)
        post_repair = evaluate(doc, marked)
        report.constraints = {
            "path": config.constraints_path,
            "on_violation": config.constraints_on_violation,
            "raw_audit": _violation_report_dict(raw_audit),
            "post_repair": _violation_report_dict(post_repair),
        }
        for r in raw_audit.failed:
            log.notes.append(
                f"collected data violates {r.name} on {len(r.violating_row_indices)} rows"
            )
    # the zero-as-missing repair must travel with the recipe so that batch
    # prediction applies the identical transform chain to raw rows
    recipe = config.recipe
    if config.data.zero_as_missing:
        mark = RecipeStep(op="mark_zeros", features=tuple(config.data.zero_as_missing))
        recipe = EngineeringRecipe((mark,) + recipe.steps, recipe.notes)

    scorecard = quality_scorecard(marked, post_repair, config.declared_quality, doc)
    report.scorecard = {
        "features": list(scorecard.features),
        "cells": {
            feature: {
                criterion: {"grade": cell.grade, "provenance": cell.provenance}
                for criterion, cell in sorted(cells.items())
            }
            for feature, cells in scorecard.cells.items()
        },
    }
    report.engineering = {
        "steps": [s.to_dict() for s in recipe.steps],
        "notes": list(recipe.notes),
    }
    for note in recipe.notes:
        log.notes.append(note)

    hard_failures = []
    if post_repair is not None:
        hard = {s.name for s in (doc.statements if doc else ()) if isinstance(s, RangeStmt)}
        for r in post_repair.failed:
            severity = "hard" if r.name in hard else "soft"
            if severity == "hard":
                hard_failures.append(r.name)
            else:
                log.notes.append(f"constraint {r.name} fails after repair (soft)")
                if log.status == "ok":
                    log.status = "warn"
    if hard_failures and config.constraints_on_violation == "abort":
        log.status = "fail"
        log.notes.append(f"hard constraint failures: {', '.join(hard_failures)}; run aborted")
        report.aborted = True
        for name in PHASES[3:]:
            report.phase(name).status = "skipped"
        return report
    if hard_failures:
        log.status = "warn"
        log.notes.append(f"hard constraint failures (warn mode): {', '.join(hard_failures)}")

    if not config.models:
        raise ConfigError("model grid is empty; nothing to train")

    # 4. model training: evaluate every grid cell by k-fold CV
    log = report.phase("model_training")
    grid: GridResult = grid_search(
        marked,
        config.models,
        config.selection_metric,
        config.validation.k,
        seed,
        recipe=recipe,
        target=config.data.target,
        doc=doc,
    )
    for row in grid.leaderboard:
        report.leaderboard.append(
            {
                "model": row.spec.kind,
                "params": row.spec.params,
                "label": row.spec.label(),
                "grid_index": row.grid_index,
                "standardized": row.standardized,
                "mean": _metricset_dict(row.cv.mean),
                "std": _metricset_dict(row.cv.std),
                "folds": [_metricset_dict(f) for f in row.cv.folds],
                "fold_sizes": list(row.cv.fold_sizes),
                "leak_free": row.cv.leak_free,
            }
        )
    log.notes.append(
        f"evaluated {len(grid.leaderboard)} model specs with {config.validation.k}-fold CV"
    )

    # 5. model optimization: pick the best spec off the leaderboard
    log = report.phase("model_optimization")
    best = grid.best
    report.selection = {
        "metric": config.selection_metric,
        "best_label": best.spec.label(),
        "best_grid_index": best.grid_index,
        "best_mean": _metricset_dict(best.cv.mean),
    }
    log.notes.append(f"selected {best.spec.label()} by mean {config.selection_metric}")

    # 6. model integration: retrain the winner on all rows and persist it
    log = report.phase("model_integration")
    engineered, fitted_recipe = fit_recipe(marked, recipe, doc)
    feature_names = [n for n in engineered.input_feature_names() if n != config.data.target]
    X = engineered.to_matrix(feature_names)
    y = np.array(engineered.column(config.data.target), dtype=float).astype(int)
    final = fit_model(best.spec, X, y, seed)
    report.model_envelope = model_envelope(
        final, feature_names, config.data.target, fitted_recipe, doc
    )
    report.model = {"kind": best.spec.kind, "params": best.spec.params, "label": best.spec.label()}
    log.notes.append(f"retrained {best.spec.label()} on {engineered.n_rows} rows")

    # 7. analytical decision making: verdict against the declared gates
    if train_only:
        return report
    log = report.phase("analytical_decision_making")
    outcome: GateOutcome = gate_check(MetricSet(**report.selection["best_mean"]), config.gates)
    report.gates = {
        "gates": [
            {
                "metric": g.metric,
                "comparator": g.comparator,
                "threshold": g.threshold,
                "severity": g.severity,
            }
            for g in config.gates
        ],
        "passed": outcome.passed,
        "violated_hard": [g.describe() for g in outcome.violated_hard],
        "violated_soft": [g.describe() for g in outcome.violated_soft],
        "verdict": outcome.describe(),
    }
    report.gates_passed = outcome.passed
    log.status = "ok" if outcome.passed else "fail"
    log.notes.append(outcome.describe())
    return report


# -- model envelope (persisted JSON) --------------------------------------------------


def model_envelope(
    fitted: FittedModel,
    features: list[str],
    target: str,
    recipe: Optional[FittedRecipe],
    doc: Optional[ConstraintDoc],
) -> dict:
    """Model document plus everything needed to score raw CSV rows."""
    out = model_to_dict(fitted.model)
    out["features"] = list(features)
    out["target"] = target
    out["recipe"] = recipe.to_dict() if recipe is not None else None
    out["constraints_source"] = doc.source_text if doc is not None else None
    if fitted.scaler is not None:
        mean, std = fitted.scaler
        out["standardizer"] = {"mean": [float(v) for v in mean], "std": [float(v) for v in std]}
    else:
        out["standardizer"] = None
    return out


def save_model(envelope: dict, path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(envelope, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class LoadedModel:
    fitted: FittedModel
    features: tuple[str, ...]
    target: str
    recipe: Optional[FittedRecipe]
    doc: Optional[ConstraintDoc]

    @property
    def probabilistic(self) -> bool:
        return self.fitted.spec.kind in ("logistic", "gbm")

    def predict_dataset(self, d: Dataset) -> tuple[np.ndarray, Optional[np.ndarray]]:
        """Engineer raw rows with the stored recipe, then score them."""
        if self.recipe is not None:
            d = self.recipe.transform(d, self.doc)
        for name in self.features:
            if not d.has_feature(name):
                raise ConfigError(f"input is missing required feature {name!r}")
        X = d.to_matrix(self.features)
        predictions = self.fitted.predict(X)
        probabilities = self.fitted.predict_proba(X)
        return predictions, probabilities


def load_model(path) -> LoadedModel:
    with open(path, encoding="utf-8") as fh:
        envelope = json.load(fh)
    model = model_from_dict(envelope)
    spec = ModelSpec(envelope["kind"], envelope.get("params", {}))
    scaler = None
    if envelope.get("standardizer"):
        scaler = (
            np.array(envelope["standardizer"]["mean"], dtype=float),
            np.array(envelope["standardizer"]["std"], dtype=float),
        )
    fitted = FittedModel(spec, model, scaler)
    recipe = FittedRecipe.from_dict(envelope["recipe"]) if envelope.get("recipe") else None
    doc = parse(envelope["constraints_source"]) if envelope.get("constraints_source") else None
    return LoadedModel(
        fitted,
        tuple(envelope.get("features", ())),
        envelope.get("target", ""),
        recipe,
        doc,
    )
