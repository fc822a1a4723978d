"""Figure and plot-data output for simulation reports.

Renders non-interactive matplotlib figures to files and writes the same
numbers as delimited text, so reports stay scriptable while still shipping
ready-made pictures.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .boost import CoefficientPath


def write_mms_csv(result, path):
    """Replication-level minimum model sizes: rep,method,mms rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rep", "method", "mms"])
        for record in result.records:
            for method in result.methods:
                writer.writerow([record["rep"], method, record["methods"][method]["mms"]])


def write_curve_csv(result, path):
    """Mean false positives by tolerated false negatives, per method."""
    agg = result.aggregates()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "fn", "fp_mean", "fp_sd"])
        for method in result.methods:
            entry = agg[method]
            sds = entry["fp_sd"] or [float("nan")] * len(entry["fn"])
            for fn, mean, sd in zip(entry["fn"], entry["fp_mean"], sds):
                writer.writerow([method, fn, repr(float(mean)), repr(float(sd))])


def write_fits_csv(result, path):
    """Post-screening fit quality per method and retained-set size."""
    agg = result.aggregates()
    fits = agg.get("fits", [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "d", "mse_mean", "auc_mean", "cstat_mean"])
        for row in fits:
            writer.writerow(
                [
                    row["method"],
                    row["d"],
                    repr(row["mse_mean"]),
                    repr(row["auc_mean"]),
                    repr(row["cstat_mean"]),
                ]
            )


def fp_fn_figure(result, path):
    """Line plot of mean false positives against tolerated false negatives."""
    agg = result.aggregates()
    fig, ax = plt.subplots(figsize=(6, 4))
    for method in result.methods:
        entry = agg[method]
        ax.plot(entry["fn"], entry["fp_mean"], marker="o", label=method)
    ax.set_xlabel("false negatives tolerated")
    ax.set_ylabel("mean false positives")
    ax.set_yscale("symlog")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def mms_figure(result, path):
    """Box plot of minimum model sizes per method."""
    fig, ax = plt.subplots(figsize=(6, 4))
    data = [result.mms(method) for method in result.methods]
    ax.boxplot(data)
    ax.set_xticks(range(1, len(data) + 1))
    ax.set_xticklabels(list(result.methods), rotation=20, fontsize=7)
    ax.set_ylabel("minimum model size")
    ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def path_figure(cpath: CoefficientPath, path):
    """Coefficient trajectories along a boosting path."""
    t_final = cpath.t_final
    active = sorted(set(int(j) for j in cpath.steps))
    traj = {j: np.zeros(t_final + 1) for j in active}
    counts: dict[int, int] = {}
    for t, (j, sign) in enumerate(zip(cpath.steps, cpath.signs), start=1):
        counts[int(j)] = counts.get(int(j), 0) + int(sign)
        for k in active:
            traj[k][t] = counts.get(k, 0) * cpath.epsilon
    fig, ax = plt.subplots(figsize=(6, 4))
    for j in active:
        ax.plot(np.arange(t_final + 1), traj[j], label=f"x{j}")
    ax.set_xlabel("step")
    ax.set_ylabel("coefficient")
    if len(active) <= 12:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
