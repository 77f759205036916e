"""Figure rendering for benchmark output.

Boxplot helpers used by the CLI report path; every function writes a
file and returns its path.  Matplotlib runs on the Agg backend so the
CLI never needs a display.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["metric_boxplot", "variance_boxplot", "estimates_boxplot"]

_FIGSIZE = (7.2, 4.4)


def _boxplot(values_by_label, ylabel, path, hline=None):
    labels = list(values_by_label)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.boxplot([values_by_label[k] for k in labels], tick_labels=labels)
    if hline is not None:
        ax.axhline(hline, color="red", linewidth=1.0)
    ax.set_ylabel(ylabel)
    ax.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def metric_boxplot(report, column, path):
    """Per-method boxplot of one metric column of a benchmark report."""
    values = {m: report.metric_values(m, column) for m in report.methods}
    hline = report.scenario.sigma2_true if column == "sigma2_estimate" else None
    return _boxplot(values, column, path, hline=hline)


def variance_boxplot(report, path):
    """Boxplot of the variance estimates with the true value marked."""
    return metric_boxplot(report, "sigma2_estimate", path)


def estimates_boxplot(values_by_label, path, truth=None, ylabel="sigma2 estimate"):
    """Boxplot for a plain mapping of label -> array (e.g. the ridge study)."""
    return _boxplot(values_by_label, ylabel, path, hline=truth)
