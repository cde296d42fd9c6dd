"""Matplotlib figure rendering for the report bundle.

Three figures accompany each successful run: per-feature distributions of
the repaired dataset, a correlation heatmap over complete numeric pairs, and
the leaderboard with fold-to-fold spread. All rendering uses the Agg backend
and writes PNG files next to the report.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .tabular import Dataset, MISSING


def _numeric_features(d: Dataset) -> list[str]:
    return [f.name for f in d.features if f.kind in ("numeric", "binary")]


def feature_distributions(d: Dataset, path) -> str:
    names = _numeric_features(d)
    cols = 3
    rows = math.ceil(len(names) / cols)
    fig, axes = plt.subplots(rows, cols, figsize=(4 * cols, 2.8 * rows))
    axes = np.atleast_1d(axes).ravel()
    for ax, name in zip(axes, names):
        values = d.numeric_values(name)
        if values.size:
            ax.hist(values, bins=30, color="#4878d0", edgecolor="white", density=True)
        missing = d.missing_fraction(name)
        title = name if missing == 0 else f"{name} ({missing:.1%} missing)"
        ax.set_title(title, fontsize=9)
        ax.tick_params(labelsize=7)
    for ax in axes[len(names):]:
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def _pairwise_correlation(d: Dataset, names: list[str]) -> np.ndarray:
    """Pearson correlations with pairwise deletion of missing cells."""
    columns = [d.column(n) for n in names]
    k = len(names)
    out = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(i, k):
            pairs = [
                (a, b)
                for a, b in zip(columns[i], columns[j])
                if a is not MISSING and b is not MISSING
            ]
            if len(pairs) < 2:
                continue
            a = np.array([p[0] for p in pairs], dtype=float)
            b = np.array([p[1] for p in pairs], dtype=float)
            if a.std() == 0 or b.std() == 0:
                continue
            out[i, j] = out[j, i] = float(np.corrcoef(a, b)[0, 1])
    return out


def correlation_matrix(d: Dataset, path) -> str:
    names = _numeric_features(d)
    corr = _pairwise_correlation(d, names)
    fig, ax = plt.subplots(figsize=(0.7 * len(names) + 2, 0.7 * len(names) + 1.5))
    image = ax.imshow(corr, vmin=-1, vmax=1, cmap="RdBu_r")
    ax.set_xticks(range(len(names)), names, rotation=45, ha="right", fontsize=7)
    ax.set_yticks(range(len(names)), names, fontsize=7)
    for i in range(len(names)):
        for j in range(len(names)):
            if not np.isnan(corr[i, j]):
                ax.text(j, i, f"{corr[i, j]:.2f}", ha="center", va="center", fontsize=6)
    fig.colorbar(image, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def leaderboard_chart(leaderboard: list[dict], metric: str, path) -> str:
    labels = [entry["label"] for entry in leaderboard]
    means = [entry["mean"][metric] or 0.0 for entry in leaderboard]
    stds = [entry["std"][metric] or 0.0 for entry in leaderboard]
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(labels)), 4))
    positions = np.arange(len(labels))
    ax.bar(positions, means, yerr=stds, capsize=4, color="#4878d0")
    ax.set_xticks(positions, labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel(f"mean CV {metric}")
    ax.set_ylim(0, 1)
    for x, m in zip(positions, means):
        ax.text(x, m + 0.02, f"{m:.3f}", ha="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def render_report_figures(report, dataset, directory) -> dict:
    """Render every figure the report has data for; returns name -> path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {}
    if dataset is not None:
        paths["fig_distributions"] = feature_distributions(
            dataset, directory / "feature_distributions.png"
        )
        paths["fig_correlation"] = correlation_matrix(dataset, directory / "correlation_matrix.png")
    if report.leaderboard:
        metric = report.selection.get("metric", "accuracy") if report.selection else "accuracy"
        paths["fig_leaderboard"] = leaderboard_chart(
            report.leaderboard, metric, directory / "leaderboard.png"
        )
    return paths
