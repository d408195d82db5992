"""Report figures rendered next to the delimited experiment output."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["performance_figure", "nmse_figure", "taps_figure"]


def _ratio_axis(ax, ratios):
    ax.set_xscale("log", base=2)
    ax.set_xticks(ratios)
    ax.set_xticklabels([f"{r:g}" for r in ratios])
    ax.set_xlabel("record length / unknowns (N / JK)")
    ax.grid(True, which="both", alpha=0.3)


def performance_figure(table, path) -> None:
    """Mean TPR, FPR and detection distance vs record length, with std bars."""
    ratios = list(table.config.n_ratios)
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for metric, marker in (("tpr", "o"), ("fpr", "s"), ("dis", "^")):
        means = [table.mean_metric(metric, r) for r in ratios]
        stds = [table.std_metric(metric, r) for r in ratios]
        ax.errorbar(ratios, means, yerr=stds, marker=marker, capsize=3,
                    label=metric.upper() if metric != "dis" else "distance")
    _ratio_axis(ax, ratios)
    ax.set_ylabel("rate / distance")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(loc="center right")
    ax.set_title(f"Topology recovery ({table.config.mode} mode, "
                 f"{table.config.monte_carlo} runs)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def nmse_figure(table, path) -> None:
    """Mean tap-estimate NMSE vs record length on a log scale."""
    ratios = list(table.config.n_ratios)
    means = [table.mean_metric("nmse", r) for r in ratios]
    stds = [table.std_metric("nmse", r) for r in ratios]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.errorbar(ratios, means, yerr=stds, marker="o", capsize=3)
    _ratio_axis(ax, ratios)
    ax.set_yscale("log")
    ax.set_ylabel("NMSE of tap estimates")
    ax.set_title(f"Tap accuracy ({table.config.mode} mode)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def taps_figure(snapshot, path) -> None:
    """True vs estimated taps on the true edges of one run."""
    K = snapshot.K
    J = snapshot.true_adjacency.shape[0]
    edges = [(i, j) for i in range(J) for j in range(J)
             if snapshot.true_adjacency[i, j]]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.55 * K * len(edges)), 3.6))
    xs_true, ys_true, xs_est, ys_est = [], [], [], []
    for e, (i, j) in enumerate(edges):
        base = e * (K + 1)
        block = slice(j * K, (j + 1) * K)
        for k in range(K):
            xs_true.append(base + k)
            ys_true.append(snapshot.true_theta[i][block][k])
            xs_est.append(base + k)
            ys_est.append(snapshot.est_theta[i][block][k])
    ax.stem(xs_true, ys_true, linefmt="C0-", markerfmt="C0o", basefmt=" ",
            label="true")
    ax.plot(xs_est, ys_est, "C3x", markersize=7, label="estimated")
    ax.axhline(0.0, color="k", linewidth=0.6)
    ax.set_xticks([e * (K + 1) + (K - 1) / 2 for e in range(len(edges))])
    ax.set_xticklabels([f"{j + 1}→{i + 1}" for (i, j) in edges],
                       fontsize=8)
    ax.set_xlabel("edge (source → target), taps grouped per edge")
    ax.set_ylabel("tap value")
    ax.set_title(f"Edge taps, run {snapshot.run_id} at N/JK = "
                 f"{snapshot.n_ratio:g}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
