"""Matplotlib figures rendered next to the CLI's delimited outputs."""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from fireline.optimize import ComparisonReport, SweepPoint


def plot_sweep(series: Mapping[str, Sequence[SweepPoint]], path) -> None:
    """Residual risk versus budget, one curve per segmentation interval."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for label, points in series.items():
        budgets = [p.budget_usd / 1e6 for p in points]
        residual = [p.residual_risk for p in points]
        ax.plot(budgets, residual, marker="o", markersize=3, label=label)
    ax.set_xlabel("Budget [million USD]")
    ax.set_ylabel("Residual risk")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_comparison(report: ComparisonReport, path) -> None:
    """Grouped bars of percent risk reduction per (plan, metric) pair."""
    metrics = report.metrics
    n = len(metrics)
    width = 0.8 / n
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for j, eval_metric in enumerate(metrics):
        xs = [i + (j - (n - 1) / 2) * width for i in range(n)]
        ys = [report.reduction_pct[(plan_metric, eval_metric)] for plan_metric in metrics]
        ax.bar(xs, ys, width=width, label=f"{eval_metric} risk")
    ax.set_xticks(range(n))
    ax.set_xticklabels([m.capitalize() for m in metrics])
    ax.set_xlabel("Risk metric minimized")
    ax.set_ylabel("Risk reduction [%]")
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
