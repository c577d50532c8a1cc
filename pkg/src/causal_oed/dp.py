"""Exact edge marginals under the order-modular structure prior.

The prior is uniform over node orders and flat over parent sets of size at
most ``max_parents``; a graph's prior weight is therefore proportional to the
number of orders it is consistent with. Everything runs in log space over
arrays indexed by node-subset bitmasks:

1. per-node family scores ``B_i(T)`` for every admissible parent set T,
2. subset sums ``A_i(S) = sum_{T <= S} B_i(T)`` (zeta transform),
3. forward sums ``L(S)`` over orders of S and backward sums ``R(S)`` over
   orders of the complement placed after S,
4. for each child v, superset sums of ``L(S) R(S + v)`` combined with
   ``B_v(T)`` to accumulate ``p(u -> v | D)`` for every u in T.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import LimitError
from .graph import Dag, mask_of, popcount
from .network import InterventionalDataset
from .scoring import BDeuConfig, FamilyScoreCache

DP_NODE_LIMIT = 20
NEG_INF = -np.inf


@dataclass(frozen=True, eq=False)
class EdgeMarginals:
    probs: np.ndarray          # probs[u, v] = p(u -> v | D)
    log_evidence: float        # log of the DP normalizer, up to the prior constant
    max_parents: int

    @property
    def num_nodes(self) -> int:
        return self.probs.shape[0]


def _zeta_subsets(a: np.ndarray, n: int) -> None:
    """In place: a[S] <- logsumexp over T subset of S of a[T]."""
    for b in range(n):
        view = a.reshape(-1, 2, 1 << b)
        np.logaddexp(view[:, 1, :], view[:, 0, :], out=view[:, 1, :])


def _zeta_supersets(a: np.ndarray, n: int) -> None:
    for b in range(n):
        view = a.reshape(-1, 2, 1 << b)
        np.logaddexp(view[:, 0, :], view[:, 1, :], out=view[:, 0, :])


def family_score_tables(data: InterventionalDataset, max_parents: int,
                        cfg: BDeuConfig = BDeuConfig(),
                        cache: FamilyScoreCache | None = None) -> np.ndarray:
    """``B[i, T]``: log local score of node i with parent set T, -inf when inadmissible."""
    n = data.num_nodes
    cache = cache if cache is not None else FamilyScoreCache(data, cfg)
    B = np.full((n, 1 << n), NEG_INF)
    for i in range(n):
        others = [u for u in range(n) if u != i]
        for k in range(min(max_parents, n - 1) + 1):
            for combo in itertools.combinations(others, k):
                T = mask_of(combo)
                B[i, T] = cache.local(i, T)
    return B


def _forward_backward(A: np.ndarray, n: int, pc: np.ndarray):
    full = (1 << n) - 1
    size = 1 << n
    L = np.full(size, NEG_INF)
    R = np.full(size, NEG_INF)
    L[0] = 0.0
    R[full] = 0.0
    layers = [np.flatnonzero(pc == k) for k in range(n + 1)]
    for k in range(1, n + 1):
        idx = layers[k]
        terms = np.full((n, idx.size), NEG_INF)
        for i in range(n):
            has = (idx >> i) & 1 == 1
            prev = idx[has] ^ (1 << i)
            terms[i, has] = L[prev] + A[i, prev]
        L[idx] = logsumexp(terms, axis=0)
    for k in range(n - 1, -1, -1):
        idx = layers[k]
        terms = np.full((n, idx.size), NEG_INF)
        for i in range(n):
            lacks = (idx >> i) & 1 == 0
            cur = idx[lacks]
            terms[i, lacks] = A[i, cur] + R[cur | (1 << i)]
        R[idx] = logsumexp(terms, axis=0)
    return L, R


def dp_edge_marginals(data: InterventionalDataset, max_parents: int = 5,
                      cfg: BDeuConfig = BDeuConfig(),
                      cache: FamilyScoreCache | None = None) -> EdgeMarginals:
    n = data.num_nodes
    if n > DP_NODE_LIMIT:
        raise LimitError(f"subset DP is limited to {DP_NODE_LIMIT} nodes (got {n})")
    if max_parents < 1:
        raise ValueError("max_parents must be >= 1")
    with np.errstate(invalid="ignore", over="ignore"):
        B = family_score_tables(data, max_parents, cfg, cache)
        return _edge_marginals_from_tables(B, n, max_parents)


def _edge_marginals_from_tables(B: np.ndarray, n: int, max_parents: int) -> EdgeMarginals:
    A = B.copy()
    for i in range(n):
        _zeta_subsets(A[i], n)
    pc = np.array([popcount(s) for s in range(1 << n)])
    L, R = _forward_backward(A, n, pc)
    log_z = L[-1]
    probs = np.zeros((n, n))
    idx = np.arange(1 << n)
    for v in range(n):
        vbit = 1 << v
        w = np.full(1 << n, NEG_INF)
        lacks_v = (idx & vbit) == 0
        w[lacks_v] = L[lacks_v] + R[idx[lacks_v] | vbit]
        _zeta_supersets(w, n)
        contrib = B[v] + w
        for u in range(n):
            if u == v:
                continue
            sel = ((idx >> u) & 1) == 1
            probs[u, v] = np.exp(logsumexp(contrib[sel]) - log_z)
    np.clip(probs, 0.0, 1.0, out=probs)
    return EdgeMarginals(probs, float(log_z), max_parents)


def count_consistent_orders(g: Dag) -> int:
    """Number of node orders (linear extensions) compatible with ``g``."""
    n = g.num_nodes
    ways = [0] * (1 << n)
    ways[0] = 1
    for S in range(1 << n):
        if not ways[S]:
            continue
        for v in range(n):
            if not (S >> v) & 1 and g.parents[v] & ~S == 0:
                ways[S | (1 << v)] += ways[S]
    return ways[-1]


def modular_prior_log_weight(g: Dag, max_parents: int) -> float:
    """Unnormalized log prior of ``g`` under the order-modular prior."""
    if any(popcount(pa) > max_parents for pa in g.parents):
        return float(NEG_INF)
    return float(np.log(count_consistent_orders(g)))


def modular_prior_log_normalizer(num_nodes: int, max_parents: int) -> float:
    """log of the sum of modular prior weights over all DAGs (the DP with flat scores)."""
    n = num_nodes
    B = np.full((n, 1 << n), NEG_INF)
    for i in range(n):
        for T in range(1 << n):
            if not (T >> i) & 1 and popcount(T) <= max_parents:
                B[i, T] = 0.0
    with np.errstate(invalid="ignore"):
        A = B.copy()
        for i in range(n):
            _zeta_subsets(A[i], n)
        pc = np.array([popcount(s) for s in range(1 << n)])
        L, _ = _forward_backward(A, n, pc)
    return float(L[-1])


