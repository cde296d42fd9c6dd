"""Declarative pipeline configuration.

A run is one JSON document: problem framing (free text, echoed into reports),
data source, constraints file, declared quality judgments, engineering
recipe, model grid, validation settings and performance gates. The config
hash covers every semantically meaningful section (report output paths are
excluded) so reports can prove which configuration produced them.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .engineering import EngineeringRecipe
from .evaluation import ModelSpec, PerformanceGate

SEED_ENV_VAR = "CMML_SEED"


class ConfigError(ValueError):
    """Invalid or incomplete pipeline configuration."""


@dataclass(frozen=True)
class ProblemSection:
    title: str = ""
    goals: tuple[str, ...] = ()
    actors: tuple[str, ...] = ()
    soft_goals: tuple[str, ...] = ()
    dependencies: tuple[str, ...] = ()


@dataclass(frozen=True)
class DataSection:
    csv_path: str
    target: str
    zero_as_missing: tuple[str, ...] = ()


@dataclass(frozen=True)
class ValidationSection:
    k: int = 5
    fractions: tuple[float, float, float] = (0.5, 0.25, 0.25)
    seed: Optional[int] = None


@dataclass(frozen=True)
class ReportSection:
    directory: str = "report"
    figures: bool = True


@dataclass(frozen=True)
class PipelineConfig:
    problem: ProblemSection
    data: DataSection
    constraints_path: Optional[str]
    constraints_on_violation: str  # abort | warn
    declared_quality: dict
    recipe: EngineeringRecipe
    models: tuple[ModelSpec, ...]
    validation: ValidationSection
    selection_metric: str
    gates: tuple[PerformanceGate, ...]
    report: ReportSection
    base_dir: str = "."

    def resolve_path(self, path: str) -> str:
        p = Path(path)
        return str(p if p.is_absolute() else Path(self.base_dir) / p)

    def seed(self, override: Optional[int] = None) -> int:
        """Seed precedence: explicit override, config, then the environment."""
        if override is not None:
            return override
        if self.validation.seed is not None:
            return self.validation.seed
        env = os.environ.get(SEED_ENV_VAR)
        if env is not None:
            try:
                return int(env)
            except ValueError:
                raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}")
        raise ConfigError(
            "no seed configured: set validation.seed, pass --seed, "
            f"or export {SEED_ENV_VAR}"
        )

    def hash(self) -> str:
        """Digest of the semantic config (everything except report paths)."""
        payload = {
            "problem": {
                "title": self.problem.title,
                "goals": list(self.problem.goals),
                "actors": list(self.problem.actors),
                "soft_goals": list(self.problem.soft_goals),
                "dependencies": list(self.problem.dependencies),
            },
            "data": {
                "csv": self.data.csv_path,
                "target": self.data.target,
                "zero_as_missing": list(self.data.zero_as_missing),
            },
            "constraints": self.constraints_path,
            "on_violation": self.constraints_on_violation,
            "quality": self.declared_quality,
            "engineering": [s.to_dict() for s in self.recipe.steps],
            "notes": list(self.recipe.notes),
            "models": [{"model": s.kind, **s.params} for s in self.models],
            "validation": {
                "k": self.validation.k,
                "fractions": list(self.validation.fractions),
                "seed": self.validation.seed,
            },
            "selection_metric": self.selection_metric,
            "gates": [
                {
                    "metric": g.metric,
                    "comparator": g.comparator,
                    "threshold": g.threshold,
                    "severity": g.severity,
                }
                for g in self.gates
            ],
        }
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _require(raw: dict, key: str, where: str):
    if key not in raw:
        raise ConfigError(f"missing required key {key!r} in {where}")
    return raw[key]


def _strings(value, where: str) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return (value,)
    if not isinstance(value, (list, tuple)) or not all(isinstance(v, str) for v in value):
        raise ConfigError(f"{where} must be a string or list of strings")
    return tuple(value)


def load_config(path) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return parse_config(raw, base_dir=str(Path(path).resolve().parent))


def parse_config(raw: dict, base_dir: str = ".") -> PipelineConfig:
    problem_raw = raw.get("problem", {})
    problem = ProblemSection(
        title=problem_raw.get("title", ""),
        goals=_strings(problem_raw.get("goals"), "problem.goals"),
        actors=_strings(problem_raw.get("actors"), "problem.actors"),
        soft_goals=_strings(problem_raw.get("soft_goals"), "problem.soft_goals"),
        dependencies=_strings(problem_raw.get("dependencies"), "problem.dependencies"),
    )

    data_raw = _require(raw, "data", "config")
    data = DataSection(
        csv_path=_require(data_raw, "csv", "data"),
        target=_require(data_raw, "target", "data"),
        zero_as_missing=_strings(data_raw.get("zero_as_missing"), "data.zero_as_missing"),
    )

    constraints_raw = raw.get("constraints", {})
    if isinstance(constraints_raw, str):
        constraints_raw = {"path": constraints_raw}
    constraints_path = constraints_raw.get("path")
    on_violation = constraints_raw.get("on_violation", "abort")
    if on_violation not in ("abort", "warn"):
        raise ConfigError("constraints.on_violation must be 'abort' or 'warn'")

    quality = raw.get("quality", {})
    if not isinstance(quality, dict):
        raise ConfigError("quality must map feature -> criterion -> grade")

    engineering_raw = raw.get("engineering", {})
    recipe = EngineeringRecipe.from_config(
        engineering_raw.get("steps", []),
        _strings(engineering_raw.get("notes"), "engineering.notes"),
    )

    models_raw = raw.get("models", [])
    if not isinstance(models_raw, list):
        raise ConfigError("models must be a list of model specs")
    models = tuple(ModelSpec.from_dict(m) for m in models_raw)

    validation_raw = raw.get("validation", {})
    fractions = validation_raw.get("fractions", [0.5, 0.25, 0.25])
    if len(fractions) != 3:
        raise ConfigError("validation.fractions must have three entries")
    validation = ValidationSection(
        k=int(validation_raw.get("k", 5)),
        fractions=tuple(float(f) for f in fractions),
        seed=validation_raw.get("seed"),
    )

    gates = tuple(
        PerformanceGate(
            metric=_require(g, "metric", "gate"),
            comparator=g.get("comparator", ">="),
            threshold=float(_require(g, "threshold", "gate")),
            severity=g.get("severity", "hard"),
        )
        for g in raw.get("gates", [])
    )

    report_raw = raw.get("report", {})
    report = ReportSection(
        directory=report_raw.get("dir", "report"),
        figures=bool(report_raw.get("figures", True)),
    )

    return PipelineConfig(
        problem=problem,
        data=data,
        constraints_path=constraints_path,
        constraints_on_violation=on_violation,
        declared_quality=quality,
        recipe=recipe,
        models=models,
        validation=validation,
        selection_metric=raw.get("selection_metric", "accuracy"),
        gates=gates,
        report=report,
        base_dir=base_dir,
    )
