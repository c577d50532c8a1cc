"""Graph recovery metrics and aggregation across simulations."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, UndefinedError
from .graph import Dag, DirectedGraph


@dataclass(frozen=True)
class MetricsRow:
    experiment: int
    hamming: int
    tpr: float
    posterior_entropy: float
    n_distinct_graphs: int


def median_probability_graph(edge_probs) -> DirectedGraph:
    P = np.asarray(edge_probs, dtype=float)
    n = P.shape[0]
    edges = frozenset((int(u), int(v)) for u, v in zip(*np.nonzero(P >= 0.5)) if u != v)
    return DirectedGraph(n, edges)


def _edge_set(g) -> frozenset:
    return g.edges if isinstance(g, DirectedGraph) else frozenset(g.edges)


def hamming(est: DirectedGraph | Dag, truth: Dag) -> int:
    """Directed false positives plus false negatives; a reversed edge counts twice."""
    if est.num_nodes != truth.num_nodes:
        raise DimensionError(f"graphs have {est.num_nodes} and {truth.num_nodes} nodes")
    a, b = _edge_set(est), _edge_set(truth)
    return len(a - b) + len(b - a)


def tpr(est: DirectedGraph | Dag, truth: Dag) -> float:
    if est.num_nodes != truth.num_nodes:
        raise DimensionError(f"graphs have {est.num_nodes} and {truth.num_nodes} nodes")
    b = _edge_set(truth)
    if not b:
        raise UndefinedError("true positive rate is undefined for an edgeless truth")
    return len(_edge_set(est) & b) / len(b)


def plugin_entropy(weights) -> float:
    w = np.asarray(weights, dtype=float)
    w = w[w > 0]
    w = w / w.sum()
    return float(-np.sum(w * np.log(w)))


def posterior_entropy_estimate(samples) -> float:
    """Plug-in entropy of the sampled graph distribution, in nats."""
    return plugin_entropy(samples.weights)


@dataclass(frozen=True)
class AggregateRow:
    experiment: int
    metric: str
    mean: float
    se: float
    n_sim: int
    degenerate: bool


def aggregate(logs: Sequence, metrics: Sequence[str] = ("hamming", "tpr", "entropy_nats")):
    """Per-experiment mean and standard error (sd / sqrt(n)) across logs.

    Each log needs ``records`` carrying ``experiment`` and the metric
    attributes. Logs that stopped early simply contribute fewer experiments;
    NaN values (e.g. TPR of an edgeless truth) are skipped. With a single
    value the SE is reported as 0 and flagged degenerate.
    """
    by_exp: dict[int, list] = {}
    for log in logs:
        for rec in log.records:
            by_exp.setdefault(rec.experiment, []).append(rec)
    out = []
    for exp_idx in sorted(by_exp):
        recs = by_exp[exp_idx]
        for name in metrics:
            vals = np.array([getattr(r, name) for r in recs], dtype=float)
            vals = vals[~np.isnan(vals)]
            m = len(vals)
            if m == 0:
                out.append(AggregateRow(exp_idx, name, math.nan, math.nan, 0, True))
            elif m == 1:
                out.append(AggregateRow(exp_idx, name, float(vals[0]), 0.0, 1, True))
            else:
                se = float(vals.std(ddof=1) / math.sqrt(m))
                out.append(AggregateRow(exp_idx, name, float(vals.mean()), se, m, False))
    return out
