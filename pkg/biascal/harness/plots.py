"""
Observed-against-predicted scatter plots of a CalibrationReport
"""

from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .report import CalibrationReport  # noqa: E402

IMPROVED, WORSE, NEUTRAL = "tab:green", "tab:red", "tab:blue"


def _diagonal(ax, *values) -> None:
    low = min(np.min(v) for v in values)
    high = max(np.max(v) for v in values)
    ax.plot([low, high], [low, high], color="0.5", linewidth=0.8)


def scalar_scatter(report: CalibrationReport, predictor: str, path: Path) -> Path:
    """One panel per scalar with measurement-error bars; points coloured by improvement."""
    rows = report.predictions[predictor]
    where = {s: i for i, s in enumerate(report.observed.samples)}
    local = [where[s] for s in rows.samples]
    obs = np.asarray(report.observed.scalars)[local]
    sig = np.asarray(report.observed.sigmas)[local]
    pred = np.asarray(rows.scalars)
    improved = np.asarray(rows.improved) if rows.improved else None

    fig, axes = plt.subplots(2, 5, figsize=(17, 7))
    for j, (ax, name) in enumerate(zip(axes.ravel(), report.scalar_names)):
        colors = NEUTRAL if improved is None else np.where(improved[:, j], IMPROVED, WORSE)
        ax.errorbar(obs[:, j], pred[:, j], xerr=sig[:, j], fmt="none", ecolor="0.7", linewidth=0.6)
        ax.scatter(obs[:, j], pred[:, j], c=colors, s=10)
        _diagonal(ax, obs[:, j], pred[:, j])
        ax.set_title(f"{name}\nχ²/N {report.chi2n[predictor][j]:.3g}", fontsize=8)
        ax.tick_params(labelsize=7)
    fig.supxlabel("observed")
    fig.supylabel(f"predicted ({predictor})")
    fig.tight_layout()
    fig.savefig(path, dpi=90)
    plt.close(fig)
    return path


def descriptor_scatter(report: CalibrationReport, predictor: str, path: Path) -> Path:
    rows = report.predictions[predictor]
    where = {s: i for i, s in enumerate(report.observed.samples)}
    obs = np.asarray(report.observed.descriptors)[[where[s] for s in rows.samples]]
    pred = np.asarray(rows.descriptors)

    fig, axes = plt.subplots(1, len(report.descriptor_names), figsize=(12, 4))
    for j, (ax, name) in enumerate(zip(np.atleast_1d(axes), report.descriptor_names)):
        ax.scatter(obs[:, j], pred[:, j], s=10, color=NEUTRAL)
        _diagonal(ax, obs[:, j], pred[:, j])
        value = report.descriptor_r2[predictor][j]
        ax.set_title(name if value is None else f"{name}  R² {value:.3f}", fontsize=9)
    fig.supxlabel("observed")
    fig.supylabel(f"predicted ({predictor})")
    fig.tight_layout()
    fig.savefig(path, dpi=90)
    plt.close(fig)
    return path


def plot_report(report: CalibrationReport, out: Path) -> List[str]:
    """Both scatter plots for every predictor; returns the written file names."""
    names = []
    for predictor, rows in report.predictions.items():
        if not rows.samples:
            continue
        names.append(scalar_scatter(report, predictor, out / f"scalars_{predictor}.png").name)
        names.append(descriptor_scatter(report, predictor, out / f"descriptors_{predictor}.png").name)
    return names
