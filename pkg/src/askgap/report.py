"""Figure rendering for build reports and plan analyses.

Figures are written as PNG files next to the delimited outputs; everything
here reads only aggregate counters, never raw instances, so rendering cost
does not grow with corpus size.
"""

from __future__ import annotations

import os
from typing import Mapping

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .builder import BuildReport  # noqa: E402
from .plans import StrategyReport  # noqa: E402

_FIG_SIZE = (6.4, 4.0)
_DPI = 120


def _save(fig: "plt.Figure", path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def _bar(ax: "plt.Axes", labels: list[str], values: list[float], title: str) -> None:
    ax.bar(range(len(labels)), values, color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_title(title)
    ax.grid(axis="y", alpha=0.3)


def render_build_figures(report: BuildReport, out_dir: str) -> list[str]:
    """Mode distribution, skip reasons, and token-length histograms."""
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []

    fig, ax = plt.subplots(figsize=_FIG_SIZE)
    modes = sorted(report.mode_counts)
    _bar(ax, modes, [report.mode_counts[m] for m in modes], "Instances per mode")
    ax.set_ylabel("instances")
    written.append(_save(fig, os.path.join(out_dir, "mode_counts.png")))

    fig, axes = plt.subplots(1, 2, figsize=(9.6, 4.0), sharey=True)
    for ax, hist, name in (
        (axes[0], report.source_hist, "source"),
        (axes[1], report.target_hist, "target"),
    ):
        buckets = sorted(hist)
        ax.bar(buckets, [hist[b] for b in buckets], width=28, color="#4878a8")
        ax.set_title(f"{name} length (tokens)")
        ax.grid(axis="y", alpha=0.3)
    axes[0].set_ylabel("instances")
    written.append(_save(fig, os.path.join(out_dir, "length_hist.png")))

    if report.skip_reasons:
        fig, ax = plt.subplots(figsize=_FIG_SIZE)
        reasons = sorted(report.skip_reasons)
        _bar(
            ax,
            reasons,
            [report.skip_reasons[r] for r in reasons],
            "Skipped documents by reason",
        )
        ax.set_ylabel("documents")
        written.append(_save(fig, os.path.join(out_dir, "skip_reasons.png")))
    return written


def render_analysis_figures(
    reports: Mapping[str, StrategyReport], out_dir: str
) -> list[str]:
    """Length ratio and overlap comparison across plan strategies."""
    os.makedirs(out_dir, exist_ok=True)
    strategies = sorted(reports)
    fig, axes = plt.subplots(1, 3, figsize=(11.0, 4.0))
    _bar(
        axes[0],
        strategies,
        [reports[s].stats.length_ratio for s in strategies],
        "plan words / summary words",
    )
    _bar(
        axes[1],
        strategies,
        [reports[s].summary_rouge1 for s in strategies],
        "unigram F1 with summary",
    )
    cross = [
        reports[s].stats.mean_overlap
        if reports[s].stats.mean_overlap is not None
        else 0.0
        for s in strategies
    ]
    _bar(axes[2], strategies, cross, "mean cross-query overlap")
    path = _save(fig, os.path.join(out_dir, "strategy_stats.png"))
    return [path]
