"""Regenerate the shipped fixture networks under src/causal_oed/fixtures/.

chain8, tree8 and sachs11 CPT rows are Dirichlet(1) draws from a fixed seed;
a draw is rejected and redrawn when any edge is too weak to matter (the
smallest total-variation change in the child's distribution caused by
flipping one parent falls below MIN_EFFECT) or, for chain8/tree8, when any
probability is below 0.05. asia8 carries the standard
published Asia CPTs.
"""
import itertools
import json
from pathlib import Path

import numpy as np

from causal_oed.graph import bits, dag_from_edges
from causal_oed.network import CategoricalNetwork, num_parent_configs, write_network

OUT = Path(__file__).resolve().parents[1] / "src" / "causal_oed" / "fixtures"
MIN_EFFECT = 0.3


def weakest_edge_effect(dag, arities, cpt):
    worst = 1.0
    for i in range(dag.num_nodes):
        ps = list(bits(dag.parents[i]))
        for a, p in enumerate(ps):
            radix = int(np.prod([arities[x] for x in ps[:a]]))
            others = [range(arities[x]) for x in ps if x != p]
            for rest in itertools.product(*others):
                rows = []
                for s in range(arities[p]):
                    states = list(rest)
                    states.insert(a, s)
                    j, r = 0, 1
                    for x, st in zip(ps, states):
                        j += st * r
                        r *= arities[x]
                    rows.append(cpt[i][j])
                effect = max(0.5 * np.abs(r1 - r2).sum()
                             for r1, r2 in itertools.combinations(rows, 2))
                worst = min(worst, effect)
    return worst


def dirichlet_network(name, n, edges, arity, seed, min_prob=0.0):
    dag = dag_from_edges(n, edges)
    arities = (arity,) * n
    rng = np.random.default_rng(seed)
    for attempt in range(10_000):
        cpt = [rng.dirichlet(np.ones(arity), size=num_parent_configs(dag.parents[i], arities))
               for i in range(n)]
        if (weakest_edge_effect(dag, arities, cpt) >= MIN_EFFECT
                and min(t.min() for t in cpt) >= min_prob):
            break
    idist = [np.full(arity, 1.0 / arity) for _ in range(n)]
    # Round for a readable file, then renormalize the last entry exactly.
    cpt = [np.round(t, 6) for t in cpt]
    for t in cpt:
        t[:, -1] = np.round(1.0 - t[:, :-1].sum(axis=1), 6)
    return CategoricalNetwork(dag, arities, tuple(cpt), tuple(idist), name=name), attempt


def asia():
    # 0 asia, 1 tub, 2 smoke, 3 lung, 4 bronc, 5 either, 6 xray, 7 dysp; state 0 = yes.
    edges = [(0, 1), (2, 3), (2, 4), (1, 5), (3, 5), (5, 6), (4, 7), (5, 7)]
    dag = dag_from_edges(8, edges)
    yes = lambda p: [p, 1.0 - p]
    cpt = [
        [yes(0.01)],
        [yes(0.05), yes(0.01)],                       # tub | asia
        [yes(0.5)],
        [yes(0.1), yes(0.01)],                        # lung | smoke
        [yes(0.6), yes(0.3)],                         # bronc | smoke
        # either | tub, lung (tub is the low digit)
        [yes(1.0), yes(1.0), yes(1.0), yes(0.0)],
        [yes(0.98), yes(0.05)],                       # xray | either
        # dysp | bronc, either (bronc is the low digit)
        [yes(0.9), yes(0.7), yes(0.8), yes(0.1)],
    ]
    net = CategoricalNetwork(dag, (2,) * 8, tuple(np.array(t) for t in cpt),
                             tuple(np.array([0.5, 0.5]) for _ in range(8)), name="asia8")
    return net


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    chain, a = dirichlet_network("chain8", 8, [(i, i + 1) for i in range(7)], 2, 8,
                                 min_prob=0.05)
    tree, b = dirichlet_network(
        "tree8", 8, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6), (6, 7)], 2, 80, min_prob=0.05)
    # Raf, Mek, Plcg, PIP2, PIP3, Erk, Akt, PKA, PKC, P38, Jnk
    sachs_edges = [(2, 4), (8, 7), (7, 0), (8, 0), (7, 10), (8, 10), (7, 9), (8, 9),
                   (2, 3), (4, 3), (7, 1), (8, 1), (0, 1), (1, 5), (7, 5), (5, 6), (7, 6)]
    sachs, c = dirichlet_network("sachs11", 11, sachs_edges, 3, 11)
    print("redraws:", a, b, c)
    for net in (chain, tree, asia(), sachs):
        write_network(net, OUT / f"{net.name}.json")


if __name__ == "__main__":
    main()
