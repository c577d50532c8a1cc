"""DAGs over integer-labelled nodes, stored as per-node parent bitmasks.

Node subsets are plain ``int`` bitmasks throughout: bit ``i`` set means node
``i`` is in the set.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .errors import CycleError, LimitError, SelfLoopError, ValidationError

MAX_NODES = 25
ENUMERATION_LIMIT = 6


def bits(mask: int) -> Iterator[int]:
    """Yield the indices of the set bits of ``mask`` in ascending order."""
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def mask_of(nodes: Iterable[int]) -> int:
    m = 0
    for v in nodes:
        m |= 1 << v
    return m


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def _topo_order(parents: Sequence[int]) -> list[int] | None:
    """Smallest-index-first topological order, or None if there is a cycle."""
    n = len(parents)
    placed = 0
    order = []
    while len(order) < n:
        for v in range(n):
            if not (placed >> v) & 1 and parents[v] & ~placed == 0:
                order.append(v)
                placed |= 1 << v
                break
        else:
            return None
    return order


def is_acyclic(parents: Sequence[int]) -> bool:
    # Kahn-style peeling of parentless nodes, all in mask arithmetic.
    remaining = (1 << len(parents)) - 1
    while remaining:
        free = 0
        for v in bits(remaining):
            if parents[v] & remaining == 0:
                free |= 1 << v
        if not free:
            return False
        remaining &= ~free
    return True


@dataclass(frozen=True)
class Dag:
    num_nodes: int
    parents: tuple[int, ...]

    def __post_init__(self):
        if len(self.parents) != self.num_nodes:
            raise ValidationError(
                f"expected {self.num_nodes} parent masks, got {len(self.parents)}")
        full = (1 << self.num_nodes) - 1
        for v, pa in enumerate(self.parents):
            if pa & ~full:
                raise ValidationError(f"node {v} has a parent outside [0, {self.num_nodes})")
            if (pa >> v) & 1:
                raise SelfLoopError(f"self loop on node {v}")
        if not is_acyclic(self.parents):
            raise CycleError("parent sets contain a directed cycle")

    @classmethod
    def empty(cls, num_nodes: int) -> "Dag":
        return cls(num_nodes, (0,) * num_nodes)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted((u, v) for v, pa in enumerate(self.parents) for u in bits(pa))

    @property
    def num_edges(self) -> int:
        return sum(popcount(pa) for pa in self.parents)

    def has_edge(self, u: int, v: int) -> bool:
        return bool((self.parents[v] >> u) & 1)

    def children_mask(self, e: int) -> int:
        return mask_of(v for v, pa in enumerate(self.parents) if (pa >> e) & 1)

    def descendants_mask(self, e: int) -> int:
        child_of = [self.children_mask(v) for v in range(self.num_nodes)]
        seen = 0
        frontier = child_of[e]
        while frontier:
            seen |= frontier
            nxt = 0
            for v in bits(frontier):
                nxt |= child_of[v]
            frontier = nxt & ~seen
        return seen

    def edge_code(self) -> int:
        """Integer whose bits are the edge indicators, ordered lexicographically by (u, v)."""
        n = self.num_nodes
        code = 0
        for v, pa in enumerate(self.parents):
            for u in bits(pa):
                code |= 1 << _pair_index(n, u, v)
        return code

    def to_json(self) -> dict:
        return {"num_nodes": self.num_nodes, "edges": [list(e) for e in self.edges]}

    def __repr__(self):
        return f"Dag({self.num_nodes}, {self.edges})"


def trusted_dag(num_nodes: int, parents: tuple[int, ...]) -> Dag:
    """Build a Dag without re-validating; callers guarantee acyclicity."""
    g = object.__new__(Dag)
    object.__setattr__(g, "num_nodes", num_nodes)
    object.__setattr__(g, "parents", parents)
    return g


def _pair_index(n: int, u: int, v: int) -> int:
    # (0,1),(0,2),...,(0,n-1),(1,0),(1,2),... -> 0,1,2,...
    return u * (n - 1) + (v if v < u else v - 1)


@dataclass(frozen=True)
class DirectedGraph:
    """Edge set with no acyclicity requirement (thresholded posteriors can be cyclic)."""
    num_nodes: int
    edges: frozenset

    def __post_init__(self):
        for u, v in self.edges:
            if u == v:
                raise SelfLoopError(f"self loop on node {u}")
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise ValidationError(f"edge ({u}, {v}) out of range")


def dag_from_edges(num_nodes: int, edges: Iterable[Sequence[int]]) -> Dag:
    if not 0 <= num_nodes <= MAX_NODES:
        raise LimitError(f"num_nodes must be in [0, {MAX_NODES}]")
    parents = [0] * num_nodes
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise ValidationError(f"edge ({u}, {v}) out of range for {num_nodes} nodes")
        if u == v:
            raise SelfLoopError(f"self loop on node {u}")
        if (parents[v] >> u) & 1:
            raise ValidationError(f"duplicate edge ({u}, {v})")
        parents[v] |= 1 << u
    return Dag(num_nodes, tuple(parents))


def dag_from_json(obj: dict) -> Dag:
    return dag_from_edges(int(obj["num_nodes"]), obj.get("edges", []))


def read_graph(path) -> Dag:
    with open(path) as fh:
        return dag_from_json(json.load(fh))


def relations(g: Dag, e: int) -> dict[str, frozenset]:
    if not 0 <= e < g.num_nodes:
        raise IndexError(f"node {e} out of range")
    return {
        "parents": frozenset(bits(g.parents[e])),
        "children": frozenset(bits(g.children_mask(e))),
        "descendants": frozenset(bits(g.descendants_mask(e))),
    }


def intervention_surgery(g: Dag, e: int) -> Dag:
    """Cut every edge into ``e``."""
    if not 0 <= e < g.num_nodes:
        raise IndexError(f"node {e} out of range")
    if g.parents[e] == 0:
        return g
    pa = list(g.parents)
    pa[e] = 0
    return trusted_dag(g.num_nodes, tuple(pa))


def topological_order(g: Dag) -> list[int]:
    return _topo_order(g.parents)


@dataclass(frozen=True, order=True)
class MecKey:
    """Skeleton plus v-structures; equal keys iff Markov equivalent."""
    skeleton: tuple[tuple[int, int], ...]
    vstructures: tuple[tuple[int, int, int], ...]

    def encode(self) -> bytes:
        # One byte per node id (V <= 25); pair/triple counts as two-byte prefixes.
        out = bytearray()
        out += len(self.skeleton).to_bytes(2, "big")
        for a, b in self.skeleton:
            out += bytes((a, b))
        out += len(self.vstructures).to_bytes(2, "big")
        for x, y, z in self.vstructures:
            out += bytes((x, y, z))
        return bytes(out)

    def to_json(self) -> dict:
        return {"skeleton": [list(p) for p in self.skeleton],
                "vstructures": [list(t) for t in self.vstructures]}


def mec_key(g: Dag) -> MecKey:
    return _mec_key_cached(g.num_nodes, g.parents)


@lru_cache(maxsize=1 << 16)
def _mec_key_cached(n: int, parents: tuple[int, ...]) -> MecKey:
    adj = [0] * n
    skeleton = []
    for v, pa in enumerate(parents):
        for u in bits(pa):
            adj[u] |= 1 << v
            adj[v] |= 1 << u
            skeleton.append((min(u, v), max(u, v)))
    vs = []
    for y, pa in enumerate(parents):
        ps = list(bits(pa))
        for a in range(len(ps)):
            for b in range(a + 1, len(ps)):
                x, z = ps[a], ps[b]
                if not (adj[x] >> z) & 1:
                    vs.append((x, y, z))
    return MecKey(tuple(sorted(skeleton)), tuple(sorted(vs)))


def _dags_on(nodes: int) -> list[tuple[tuple[int, int], ...]]:
    """All DAGs on the node subset ``nodes`` as tuples of (node, parent_mask).

    Each DAG is generated once, keyed by its (nonempty) set of source nodes:
    the rest is a DAG on the remaining nodes in which every source receives
    at least one edge from the chosen sources.
    """
    return _dags_on_cached(nodes)


@lru_cache(maxsize=None)
def _dags_on_cached(nodes: int):
    if nodes == 0:
        return [()]
    out = []
    sub = nodes
    while sub:
        sources = sub
        rest = nodes & ~sources
        src_subsets = _submasks(sources)
        nonempty = [s for s in src_subsets if s]
        for inner in _dags_on_cached(rest):
            choices = []
            for v, pa in inner:
                choices.append((v, pa, nonempty if pa == 0 else src_subsets))
            base = tuple((s, 0) for s in bits(sources))
            partial = [base]
            for v, pa, opts in choices:
                partial = [p + ((v, pa | extra),) for p in partial for extra in opts]
            out.extend(partial)
        sub = (sub - 1) & nodes
    return out


def _submasks(mask: int) -> list[int]:
    subs = []
    s = mask
    while True:
        subs.append(s)
        if s == 0:
            break
        s = (s - 1) & mask
    return subs


def enumerate_dags(num_nodes: int, limit: int = ENUMERATION_LIMIT) -> list[Dag]:
    """Every labelled DAG on ``num_nodes`` nodes, ordered by edge code."""
    if num_nodes > limit:
        raise LimitError(f"enumerate_dags is capped at {limit} nodes (asked for {num_nodes})")
    if num_nodes < 0:
        raise ValueError("num_nodes must be nonnegative")
    graphs = []
    for assignment in _dags_on((1 << num_nodes) - 1):
        pa = [0] * num_nodes
        for v, m in assignment:
            pa[v] = m
        graphs.append(trusted_dag(num_nodes, tuple(pa)))
    if num_nodes >= 6:
        _dags_on_cached.cache_clear()
    graphs.sort(key=Dag.edge_code)
    return graphs
