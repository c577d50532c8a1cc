"""Posterior over DAGs: exact enumeration for small graphs and structure MCMC.

The sampler is Metropolis-Hastings over DAGs. Each step is either a local
move (add, delete or reverse one edge, uniform over the valid moves) or,
with probability ``global_move_prob``, an independence proposal that draws
every edge as a Bernoulli with its exact order-modular marginal probability.
Both kernels are Hastings-corrected against the true posterior under the
chosen graph prior, so the modular prior only shapes proposals.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dp import dp_edge_marginals
from .errors import LimitError, ValidationError
from .graph import Dag, enumerate_dags, is_acyclic, trusted_dag
from .network import InterventionalDataset
from .scoring import BDeuConfig, FamilyScoreCache

EXACT_LIMIT = 5
PROPOSAL_EPS = 1e-6


@dataclass(frozen=True)
class GraphPrior:
    """``uniform``, ``table`` (explicit log-weights per DAG) or ``modular``."""
    kind: str = "uniform"
    table: Mapping[Dag, float] | None = None
    max_parents: int = 5

    def __post_init__(self):
        if self.kind not in ("uniform", "table", "modular"):
            raise ValidationError(f"unknown prior kind {self.kind!r}")
        if self.kind == "table" and self.table is None:
            raise ValidationError("table prior needs a table")

    @classmethod
    def uniform(cls) -> "GraphPrior":
        return cls()

    @classmethod
    def from_table(cls, table: Mapping[Dag, float]) -> "GraphPrior":
        return cls("table", dict(table))

    def log_prior(self, g: Dag) -> float:
        if self.kind == "uniform":
            return 0.0
        if self.kind == "table":
            try:
                return self.table[g]
            except KeyError:
                raise KeyError(f"table prior has no entry for {g!r}") from None
        from .dp import modular_prior_log_weight
        return modular_prior_log_weight(g, self.max_parents)


@dataclass(frozen=True)
class McmcConfig:
    n_iterations: int = 250_000
    burn_in: int = 150_000
    global_move_prob: float = 0.1
    max_parents: int = 5
    seed: int = 0

    def __post_init__(self):
        problems = []
        if self.n_iterations < 1:
            problems.append("n_iterations must be >= 1")
        if not 0 <= self.burn_in < self.n_iterations:
            problems.append("burn_in must satisfy 0 <= burn_in < n_iterations")
        if not 0.0 <= self.global_move_prob <= 1.0:
            problems.append("global_move_prob must be in [0, 1]")
        if self.max_parents < 1:
            problems.append("max_parents must be >= 1")
        if problems:
            raise ValidationError(problems)


@dataclass(frozen=True, eq=False)
class PosteriorSamples:
    """Distinct graphs with normalized weights.

    MCMC output keeps the multiplicity of every retained state in ``counts``;
    exact output keeps ``log_weights``.
    """
    num_nodes: int
    graphs: tuple[Dag, ...]
    weights: np.ndarray
    counts: np.ndarray | None = None
    log_weights: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.graphs:
            raise ValidationError("posterior samples must be nonempty")
        if len(self.graphs) != len(self.weights):
            raise ValidationError("one weight per graph required")

    @property
    def exact(self) -> bool:
        return self.counts is None

    @property
    def total(self) -> int:
        return int(self.counts.sum()) if self.counts is not None else len(self.graphs)

    @classmethod
    def from_counts(cls, counts: Mapping[Dag, int], provenance: dict | None = None):
        graphs = sorted(counts, key=Dag.edge_code)
        c = np.array([counts[g] for g in graphs], dtype=np.int64)
        if np.any(c <= 0):
            raise ValidationError("multiplicities must be positive")
        return cls(graphs[0].num_nodes, tuple(graphs), c / c.sum(), counts=c,
                   provenance=dict(provenance or {}))

    @classmethod
    def from_graphs(cls, graphs: Sequence[Dag], provenance: dict | None = None):
        counts: dict[Dag, int] = {}
        for g in graphs:
            counts[g] = counts.get(g, 0) + 1
        return cls.from_counts(counts, provenance)

    @classmethod
    def from_log_weights(cls, graphs: Sequence[Dag], log_weights, provenance=None):
        lw = np.asarray(log_weights, dtype=float)
        w = np.exp(lw - lw.max())
        w /= w.sum()
        return cls(graphs[0].num_nodes, tuple(graphs), w, log_weights=lw,
                   provenance=dict(provenance or {}))

    def weight_of(self, g: Dag) -> float:
        lookup = self.__dict__.get("_lookup")
        if lookup is None:
            lookup = {h: w for h, w in zip(self.graphs, self.weights)}
            object.__setattr__(self, "_lookup", lookup)
        return float(lookup.get(g, 0.0))


def exact_posterior(data: InterventionalDataset, prior: GraphPrior = GraphPrior(),
                    v_limit: int = EXACT_LIMIT, cfg: BDeuConfig = BDeuConfig(),
                    cache: FamilyScoreCache | None = None) -> PosteriorSamples:
    n = data.num_nodes
    if n > v_limit:
        raise LimitError(f"exact posterior is capped at {v_limit} nodes (got {n})")
    cache = cache if cache is not None else FamilyScoreCache(data, cfg)
    graphs = enumerate_dags(n, limit=max(v_limit, n))
    lw = np.array([cache.graph(g) + prior.log_prior(g) for g in graphs])
    keep = np.isfinite(lw)
    graphs = [g for g, k in zip(graphs, keep) if k]
    return PosteriorSamples.from_log_weights(
        graphs, lw[keep], provenance={"sampler": "exact", "prior": prior.kind})


def edge_probabilities(samples: PosteriorSamples) -> np.ndarray:
    n = samples.num_nodes
    P = np.zeros((n, n))
    for g, w in zip(samples.graphs, samples.weights):
        for v, pa in enumerate(g.parents):
            m = pa
            while m:
                low = m & -m
                P[low.bit_length() - 1, v] += w
                m ^= low
    return P


# -- sampler internals -------------------------------------------------------
# States are tuples of parent bitmasks. Moves are (kind, u, v) with kind
# 0 = add u->v, 1 = delete u->v, 2 = reverse u->v.

def _local_moves(pa: tuple[int, ...], n: int) -> list[tuple[int, int, int]]:
    ch = [0] * n
    for v in range(n):
        m = pa[v]
        while m:
            low = m & -m
            ch[low.bit_length() - 1] |= 1 << v
            m ^= low
    # Descendant masks, filled sinks-first.
    desc = [0] * n
    done = 0
    full = (1 << n) - 1
    while done != full:
        for u in range(n):
            if (done >> u) & 1 or ch[u] & ~done:
                continue
            d = 0
            m = ch[u]
            while m:
                low = m & -m
                d |= low | desc[low.bit_length() - 1]
                m ^= low
            desc[u] = d
            done |= 1 << u
    moves = []
    for v in range(n):
        blocked = desc[v] | pa[v] | (1 << v)
        for u in range(n):
            if not (blocked >> u) & 1:
                moves.append((0, u, v))
        m = pa[v]
        while m:
            low = m & -m
            u = low.bit_length() - 1
            m ^= low
            moves.append((1, u, v))
            # Reversal is valid iff no other directed path u ~> v exists.
            other = ch[u] & ~(1 << v)
            ok = True
            while other:
                lw = other & -other
                if (desc[lw.bit_length() - 1] >> v) & 1:
                    ok = False
                    break
                other ^= lw
            if ok:
                moves.append((2, u, v))
    return moves


def local_neighborhood(g: Dag) -> list[tuple[int, int, int]]:
    """Valid single-edge moves from ``g`` as (kind, u, v); kind 0/1/2 = add/delete/reverse."""
    return _local_moves(g.parents, g.num_nodes)


class _Target:
    """Unnormalized log posterior over parent-mask tuples with family caching."""

    def __init__(self, cache: FamilyScoreCache, prior: GraphPrior, n: int):
        self.cache = cache
        self.n = n
        self.prior = prior
        self._table = None
        if prior.kind == "table":
            self._table = {g.parents: w for g, w in prior.table.items()
                           if g.num_nodes == n}

    def fam(self, i: int, mask: int) -> float:
        return self.cache.local(i, mask)

    def log_prior(self, pa: tuple[int, ...]) -> float:
        if self._table is None:
            return 0.0
        try:
            return self._table[pa]
        except KeyError:
            raise KeyError(f"table prior has no entry for parents {pa}") from None

    def full(self, pa: tuple[int, ...]) -> float:
        return sum(self.fam(i, m) for i, m in enumerate(pa)) + self.log_prior(pa)


def mcmc_sample(data: InterventionalDataset, prior: GraphPrior = GraphPrior(),
                cfg: McmcConfig = McmcConfig(), score_cfg: BDeuConfig = BDeuConfig(),
                cache: FamilyScoreCache | None = None,
                initial: Dag | None = None) -> PosteriorSamples:
    if prior.kind == "modular":
        raise ValidationError("the sampler targets the true posterior; use a uniform or table prior")
    n = data.num_nodes
    cache = cache if cache is not None else FamilyScoreCache(data, score_cfg)
    target = _Target(cache, prior, n)
    rng = random.Random(cfg.seed)
    rnd = rng.random

    use_global = cfg.global_move_prob > 0 and n > 1
    if use_global:
        em = dp_edge_marginals(data, cfg.max_parents, score_cfg, cache)
        P = np.clip(em.probs, PROPOSAL_EPS, 1 - PROPOSAL_EPS)
        logp = np.log(P)
        log1mp = np.log1p(-P)
        gain = (logp - log1mp).tolist()
        base = float(sum(log1mp[u, v] for u in range(n) for v in range(n) if u != v))
        Pl = P.tolist()

        def log_q(state):
            s = base
            for v, m in enumerate(state):
                while m:
                    low = m & -m
                    s += gain[low.bit_length() - 1][v]
                    m ^= low
            return s

    moves_cache: dict[tuple, list] = {}

    def moves_of(state):
        mv = moves_cache.get(state)
        if mv is None:
            mv = _local_moves(state, n)
            moves_cache[state] = mv
        return mv

    cur = initial.parents if initial is not None else (0,) * n
    cur_score = target.full(cur)
    if not math.isfinite(cur_score):
        raise ValidationError("initial graph has zero posterior probability")
    counts: dict[tuple, int] = {}
    accepted = [0, 0]
    proposed = [0, 0]
    gp = cfg.global_move_prob
    burn = cfg.burn_in
    log = math.log

    for it in range(cfg.n_iterations):
        if use_global and rnd() < gp:
            proposed[1] += 1
            new = [0] * n
            for v in range(n):
                row_m = 0
                for u in range(n):
                    if u != v and rnd() < Pl[u][v]:
                        row_m |= 1 << u
                new[v] = row_m
            new = tuple(new)
            if new != cur and is_acyclic(new):
                new_score = target.full(new)
                log_ratio = new_score - cur_score + log_q(cur) - log_q(new)
                if log(1.0 - rnd()) < log_ratio:
                    cur, cur_score = new, new_score
                    accepted[1] += 1
        else:
            proposed[0] += 1
            mv = moves_of(cur)
            if mv:
                kind, u, v = mv[int(rnd() * len(mv))]
                lst = list(cur)
                bit_u = 1 << u
                if kind == 0:
                    lst[v] = cur[v] | bit_u
                    delta = target.fam(v, lst[v]) - target.fam(v, cur[v])
                elif kind == 1:
                    lst[v] = cur[v] & ~bit_u
                    delta = target.fam(v, lst[v]) - target.fam(v, cur[v])
                else:
                    lst[v] = cur[v] & ~bit_u
                    lst[u] = cur[u] | (1 << v)
                    delta = (target.fam(v, lst[v]) - target.fam(v, cur[v])
                             + target.fam(u, lst[u]) - target.fam(u, cur[u]))
                new = tuple(lst)
                if target._table is not None:
                    delta += target.log_prior(new) - target.log_prior(cur)
                log_u = log(1.0 - rnd())
                bound = delta + log(len(mv))
                # The reverse move always exists, so the proposed state has at
                # least one neighbour; skip the neighbourhood build when even
                # that best case is rejected.
                if log_u < bound and log_u < bound - log(len(moves_of(new))):
                    cur = new
                    cur_score += delta
                    accepted[0] += 1
        if it >= burn:
            counts[cur] = counts.get(cur, 0) + 1

    by_dag = {trusted_dag(n, pa): c for pa, c in counts.items()}
    return PosteriorSamples.from_counts(by_dag, provenance={
        "sampler": "mcmc",
        "seed": cfg.seed,
        "n_iterations": cfg.n_iterations,
        "burn_in": cfg.burn_in,
        "global_move_prob": cfg.global_move_prob,
        "max_parents": cfg.max_parents,
        "local_acceptance": accepted[0] / proposed[0] if proposed[0] else None,
        "global_acceptance": accepted[1] / proposed[1] if proposed[1] else None,
    })


def total_variation(p: PosteriorSamples, q: PosteriorSamples) -> float:
    keys = set(p.graphs) | set(q.graphs)
    return 0.5 * sum(abs(p.weight_of(g) - q.weight_of(g)) for g in keys)
