"""Optional CSV -> figure rendering (matplotlib is imported lazily)."""

from __future__ import annotations

import csv

import numpy as np

from .metrics import MetricsTable, cdf


def _pyplot():
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # pragma: no cover
        raise RuntimeError(
            "plotting needs matplotlib; install the 'plot' extra"
        ) from exc
    return plt


def plot_training_curve(curve_csv, out_png, metric="mean_Q"):
    plt = _pyplot()
    with open(curve_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if metric not in (reader.fieldnames or []):
        raise ValueError(f"{curve_csv}: no column {metric!r}; have {reader.fieldnames}")
    x = np.array([float(r["episode"]) for r in rows])
    y = np.array([float(r[metric]) for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x, y)
    ax.set_xlabel("episode")
    ax.set_ylabel(metric)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return out_png


def plot_metric_cdf(metrics_csv, out_png, metric="mean_q"):
    """Empirical CDF of a metric across a long-format metrics table,
    one curve per run_id."""
    plt = _pyplot()
    table = MetricsTable.from_csv(metrics_csv)
    run_ids = sorted({r[0] for r in table.rows if r[3] == metric})
    if not run_ids:
        raise ValueError(f"{metrics_csv}: no rows for metric {metric!r}")
    fig, ax = plt.subplots(figsize=(6, 4))
    for run_id in run_ids:
        values, frac = cdf(table.values(metric, run_id=run_id))
        ax.step(values, frac, where="post", label=run_id)
    ax.set_xlabel(metric)
    ax.set_ylabel("cumulative fraction")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return out_png
