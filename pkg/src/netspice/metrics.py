"""Scoring: topology detection rates and tap-estimate accuracy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TopologyScore", "topology_score", "nmse", "node_nmse"]


@dataclass(frozen=True)
class TopologyScore:
    """Detection rates of an estimated adjacency against the truth.

    tpr = detected true edges / true edges, fpr = spurious edges / absent
    slots, both over off-diagonal entries only.  dis is the distance to the
    ideal (fpr, tpr) = (0, 1) corner: sqrt(fpr^2 + (1-tpr)^2), in [0, sqrt 2].
    tpr_defaulted / fpr_defaulted mark the degenerate conventions (no true
    edges -> tpr = 1; complete true graph -> fpr = 0).
    """

    tpr: float
    fpr: float
    dis: float
    n_true_edges: int
    n_absent: int
    tpr_defaulted: bool = False
    fpr_defaulted: bool = False

    def __post_init__(self):
        if not 0.0 <= self.tpr <= 1.0 or not 0.0 <= self.fpr <= 1.0:
            raise ValueError("rates must lie in [0, 1]")


def _check_adjacency(est: np.ndarray, truth: np.ndarray):
    est = np.asarray(est, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if est.shape != truth.shape or est.ndim != 2 or est.shape[0] != est.shape[1]:
        raise ValueError("adjacency matrices must be square and same shape")
    if np.any(np.diag(est)) or np.any(np.diag(truth)):
        raise ValueError("adjacency diagonals must be False")
    return est, truth


def topology_score(estimated: np.ndarray, truth: np.ndarray) -> TopologyScore:
    """Compare estimated and true adjacency over off-diagonal slots."""
    est, truth = _check_adjacency(estimated, truth)
    off = ~np.eye(truth.shape[0], dtype=bool)
    n_true = int(np.count_nonzero(truth & off))
    n_absent = int(np.count_nonzero(~truth & off))
    tpr_defaulted = n_true == 0
    fpr_defaulted = n_absent == 0
    tpr = 1.0 if tpr_defaulted else np.count_nonzero(est & truth & off) / n_true
    fpr = 0.0 if fpr_defaulted else np.count_nonzero(est & ~truth & off) / n_absent
    dis = float(np.hypot(fpr, 1.0 - tpr))
    return TopologyScore(tpr=float(tpr), fpr=float(fpr), dis=dis,
                         n_true_edges=n_true, n_absent=n_absent,
                         tpr_defaulted=tpr_defaulted,
                         fpr_defaulted=fpr_defaulted)


def node_nmse(estimated: list[np.ndarray], truth: list[np.ndarray]):
    """Per-node relative squared error and the count of excluded nodes.

    Node i scores ||est_i - true_i||^2 / ||true_i||^2.  Nodes whose true
    vector is identically zero carry no scale and are excluded (counted in
    the second return value).
    """
    if len(estimated) != len(truth) or not truth:
        raise ValueError("need matching nonempty estimate/truth lists")
    values = []
    excluded = 0
    for est, tru in zip(estimated, truth):
        est = np.asarray(est, dtype=float)
        tru = np.asarray(tru, dtype=float)
        if est.shape != tru.shape:
            raise ValueError("estimate/truth shape mismatch")
        denom = float(tru @ tru)
        if denom == 0.0:
            excluded += 1
            continue
        diff = est - tru
        values.append(float(diff @ diff) / denom)
    return np.asarray(values), excluded


def nmse(estimated: list[np.ndarray], truth: list[np.ndarray]) -> float:
    """Mean per-node relative squared error over nodes with nonzero truth.

    Raises when every node's truth is zero (the score is undefined).
    """
    values, _ = node_nmse(estimated, truth)
    if values.size == 0:
        raise ValueError("all true tap vectors are zero: NMSE undefined")
    return float(np.mean(values))
