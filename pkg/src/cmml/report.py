"""Report emission: JSON (authoritative), Markdown, and a leaderboard CSV.

The JSON document is deterministic — sorted keys, no floating-point
surprises — except for the single ``environment.timestamp`` field, so two
runs with the same config and seed can be compared byte for byte after
dropping that one key.
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path
from typing import Optional

from .constraints import CRITERIA_GROUPS, CRITERIA_LABELS
from .pipeline import RunReport, save_model

METRIC_COLUMNS = ("accuracy", "sensitivity", "specificity", "precision", "recall", "f1", "auc")


def report_to_dict(report: RunReport, model_path: Optional[str] = None) -> dict:
    out = {
        "phases": [
            {"name": p.name, "status": p.status, "notes": list(p.notes)} for p in report.phases
        ],
        "problem": report.problem,
        "data": report.data,
        "constraints": report.constraints,
        "quality_scorecard": report.scorecard,
        "engineering": report.engineering,
        "leaderboard": report.leaderboard,
        "selection": report.selection,
        "model": dict(report.model, path=model_path),
        "gates": report.gates,
        "aborted": report.aborted,
        "environment": report.environment,
    }
    return out


def report_to_json(report: RunReport, model_path: Optional[str] = None, timestamp: Optional[str] = None) -> str:
    doc = report_to_dict(report, model_path)
    doc["environment"] = dict(doc["environment"])
    doc["environment"]["timestamp"] = timestamp or time.strftime("%Y-%m-%dT%H:%M:%S%z")
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -- markdown ---------------------------------------------------------------------


def _md_table(headers, rows) -> list[str]:
    lines = ["| " + " | ".join(headers) + " |"]
    lines.append("|" + "|".join([" --- "] * len(headers)) + "|")
    for row in rows:
        lines.append("| " + " | ".join(str(c) for c in row) + " |")
    return lines


def _fmt(value, digits: int = 4) -> str:
    if value is None:
        return "—"
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def _stats_section(report: RunReport) -> list[str]:
    stats = report.data.get("descriptive_stats", {})
    rows = []
    for name, s in stats.items():
        rows.append(
            [
                name,
                s["count"],
                _fmt(s["mean"], 2),
                _fmt(s["std"], 2),
                _fmt(s["min"], 3),
                _fmt(s["q25"], 2),
                _fmt(s["median"], 2),
                _fmt(s["q75"], 2),
                _fmt(s["max"], 2),
            ]
        )
    return _md_table(
        ["Feature", "count", "mean", "std", "min", "25%", "50%", "75%", "max"], rows
    )


def _scorecard_section(report: RunReport) -> list[str]:
    card = report.scorecard
    features = card.get("features", [])
    if not features:
        return ["_no scorecard_"]
    lines = []
    header = ["Category", "Criterion"] + features
    rows = []
    for group, criteria in CRITERIA_GROUPS.items():
        for i, criterion in enumerate(criteria):
            row = [group.capitalize() if i == 0 else "", CRITERIA_LABELS[criterion]]
            for feature in features:
                cell = card["cells"].get(feature, {}).get(criterion)
                if cell is None:
                    row.append("")
                else:
                    mark = "" if cell["provenance"] == "declared" else "*"
                    row.append(cell["grade"] + mark)
            rows.append(row)
    lines.extend(_md_table(header, rows))
    lines.append("")
    lines.append("`*` = computed from the data; other grades are declared in config.")
    return lines


def _constraints_section(report: RunReport) -> list[str]:
    info = report.constraints
    if not info:
        return ["_no constraints configured_"]
    lines = []
    for title, key in (("As collected", "raw_audit"), ("After repair", "post_repair")):
        lines.append(f"**{title}:**")
        lines.append("")
        rows = [
            [
                r["name"],
                r["kind"],
                r["status"],
                r["violating_row_count"],
                r["skipped_rows"],
                _fmt(r.get("observed")) if r["kind"] == "invariant" else "",
            ]
            for r in info.get(key, [])
        ]
        lines.extend(_md_table(["Name", "Kind", "Status", "Violations", "Skipped", "Observed"], rows))
        lines.append("")
    return lines


def _leaderboard_section(report: RunReport) -> list[str]:
    rows = []
    for entry in report.leaderboard:
        mean = entry["mean"]
        rows.append(
            [entry["label"], "yes" if entry["standardized"] else "no"]
            + [_fmt(mean[m]) for m in METRIC_COLUMNS]
        )
    return _md_table(["Model", "Standardized"] + list(METRIC_COLUMNS), rows)


def report_to_markdown(report: RunReport, model_path: Optional[str] = None) -> str:
    lines = [f"# Run report: {report.problem.get('title') or 'untitled'}", ""]
    env = report.environment
    lines.append(
        f"Seed `{env.get('seed')}` · config `{env.get('config_hash', '')[:12]}` · "
        f"version {env.get('package_version')}"
    )
    lines.append("")

    lines.append("## Phases")
    lines.append("")
    for p in report.phases:
        lines.append(f"- **{p.name}** — {p.status}")
        for note in p.notes:
            lines.append(f"  - {note}")
    lines.append("")

    if report.aborted:
        lines.append("## ABORTED")
        lines.append("")
        lines.append("Hard constraint failures stopped this run before model training.")
        lines.append("")

    if report.problem.get("goals") or report.problem.get("actors"):
        lines.append("## Problem")
        lines.append("")
        for label in ("actors", "goals", "soft_goals", "dependencies"):
            values = report.problem.get(label, [])
            if values:
                lines.append(f"**{label.replace('_', ' ').capitalize()}:**")
                lines.extend(f"- {v}" for v in values)
                lines.append("")

    lines.append("## Descriptive statistics")
    lines.append("")
    lines.extend(_stats_section(report))
    lines.append("")

    lines.append("## Constraint evaluation")
    lines.append("")
    lines.extend(_constraints_section(report))
    lines.append("")

    lines.append("## Data quality scorecard")
    lines.append("")
    lines.extend(_scorecard_section(report))
    lines.append("")

    lines.append("## Leaderboard")
    lines.append("")
    if report.leaderboard:
        lines.extend(_leaderboard_section(report))
    else:
        lines.append("_empty (run aborted before training)_")
    lines.append("")

    if report.selection:
        lines.append("## Selection")
        lines.append("")
        lines.append(
            f"Best model: **{report.selection['best_label']}** by mean "
            f"{report.selection['metric']}."
        )
        if model_path:
            lines.append(f"Serialized to `{model_path}`.")
        lines.append("")

    if report.gates:
        lines.append("## Gate verdict")
        lines.append("")
        lines.append(f"**{report.gates['verdict']}**")
        lines.append("")
        rows = [
            [g["metric"], g["comparator"], g["threshold"], g["severity"]]
            for g in report.gates["gates"]
        ]
        lines.extend(_md_table(["Metric", "Comparator", "Threshold", "Severity"], rows))
        lines.append("")
    return "\n".join(lines)


def leaderboard_csv(report: RunReport, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "standardized", "grid_index"] + list(METRIC_COLUMNS))
        for entry in report.leaderboard:
            writer.writerow(
                [entry["label"], entry["standardized"], entry["grid_index"]]
                + [entry["mean"][m] for m in METRIC_COLUMNS]
            )


def emit_report(
    report: RunReport,
    directory,
    formats=("json", "markdown"),
    figures: bool = False,
    dataset=None,
) -> dict:
    """Write the report bundle; returns the paths written.

    Always writes the chosen model (when one exists) next to the report, and
    a leaderboard.csv when there is a leaderboard. Figures render only when
    asked (they need the marked dataset for the distribution plots).
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {}

    model_path = None
    if report.model_envelope is not None:
        model_path = "model.json"  # relative to the report directory
        save_model(report.model_envelope, directory / model_path)
        paths["model"] = str(directory / model_path)

    if "json" in formats:
        path = directory / "report.json"
        path.write_text(report_to_json(report, model_path), encoding="utf-8")
        paths["json"] = str(path)
    if "markdown" in formats:
        path = directory / "report.md"
        path.write_text(report_to_markdown(report, model_path), encoding="utf-8")
        paths["markdown"] = str(path)
    if report.leaderboard:
        path = directory / "leaderboard.csv"
        leaderboard_csv(report, path)
        paths["leaderboard"] = str(path)
    if figures:
        from .figures import render_report_figures

        dataset = dataset if dataset is not None else report.marked_dataset
        paths.update(render_report_figures(report, dataset, directory / "figures"))
    return paths
