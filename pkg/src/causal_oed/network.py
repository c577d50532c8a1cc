"""Categorical causal networks, edge-breaking interventions, and datasets."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, ValidationError
from .graph import Dag, bits, dag_from_edges, topological_order

PROB_TOL = 1e-12


def parent_config_index(states: Sequence[int], parent_set: int, arities: Sequence[int]) -> int:
    """Mixed-radix index of the parents' joint state.

    Parents are taken in ascending node order with the lowest-indexed parent
    as the least-significant digit.
    """
    j = 0
    radix = 1
    for p in bits(parent_set):
        j += int(states[p]) * radix
        radix *= arities[p]
    return j


def num_parent_configs(parent_set: int, arities: Sequence[int]) -> int:
    q = 1
    for p in bits(parent_set):
        q *= arities[p]
    return q


@dataclass(frozen=True)
class FixedValue:
    state: int


@dataclass(frozen=True)
class Distribution:
    probs: tuple[float, ...]


@dataclass(frozen=True)
class InterventionSpec:
    """Targets mapped to how each is set; an empty mapping is observational."""
    modes: Mapping[int, FixedValue | Distribution] = field(default_factory=dict)

    @property
    def targets(self) -> frozenset:
        return frozenset(self.modes)

    @classmethod
    def observational(cls) -> "InterventionSpec":
        return cls({})

    @classmethod
    def fixed(cls, node: int, state: int = 0) -> "InterventionSpec":
        return cls({node: FixedValue(state)})

    def validate(self, arities: Sequence[int]) -> None:
        for node, mode in self.modes.items():
            if not 0 <= node < len(arities):
                raise ValidationError(f"intervention target {node} out of range")
            if isinstance(mode, FixedValue):
                if not 0 <= mode.state < arities[node]:
                    raise ValidationError(f"fixed state {mode.state} invalid for node {node}")
            else:
                p = np.asarray(mode.probs, dtype=float)
                if p.shape != (arities[node],) or np.any(p < 0) or abs(p.sum() - 1) > PROB_TOL:
                    raise ValidationError(f"bad intervention distribution for node {node}")


@dataclass(frozen=True, eq=False)
class CategoricalNetwork:
    dag: Dag
    arities: tuple[int, ...]
    cpt: tuple[np.ndarray, ...]
    intervention_dist: tuple[np.ndarray, ...]
    name: str = ""

    def __post_init__(self):
        n = self.dag.num_nodes
        if len(self.arities) != n or len(self.cpt) != n or len(self.intervention_dist) != n:
            raise DimensionError("arities/cpt/intervention_dist must have one entry per node")
        problems = []
        for i in range(n):
            r = self.arities[i]
            if r < 2:
                problems.append(f"node {i}: arity must be >= 2")
                continue
            q = num_parent_configs(self.dag.parents[i], self.arities)
            t = self.cpt[i]
            if t.shape != (q, r):
                problems.append(f"node {i}: cpt shape {t.shape}, expected {(q, r)}")
            elif np.any(t < 0) or np.any(np.abs(t.sum(axis=1) - 1) > PROB_TOL):
                problems.append(f"node {i}: cpt rows must be nonnegative and sum to 1")
            d = self.intervention_dist[i]
            if d.shape != (r,) or np.any(d < 0) or abs(d.sum() - 1) > PROB_TOL:
                problems.append(f"node {i}: intervention_dist must be a distribution over {r} states")
        if problems:
            raise ValidationError(problems)

    @property
    def num_nodes(self) -> int:
        return self.dag.num_nodes

    def to_json(self) -> dict:
        out = {}
        if self.name:
            out["name"] = self.name
        out.update({
            "num_nodes": self.num_nodes,
            "edges": [list(e) for e in self.dag.edges],
            "arities": list(self.arities),
            "cpt": [t.tolist() for t in self.cpt],
            "intervention_dist": [d.tolist() for d in self.intervention_dist],
        })
        return out


NETWORK_KEYS = {"num_nodes", "edges", "arities", "cpt", "intervention_dist",
                "name", "node_names", "notes"}


def network_from_json(obj: dict) -> CategoricalNetwork:
    unknown = set(obj) - NETWORK_KEYS
    if unknown:
        raise ValidationError([f"unknown network key {k!r}" for k in sorted(unknown)])
    dag = dag_from_edges(int(obj["num_nodes"]), obj.get("edges", []))
    return CategoricalNetwork(
        dag=dag,
        arities=tuple(int(r) for r in obj["arities"]),
        cpt=tuple(np.asarray(t, dtype=float).reshape(-1, int(r))
                  for t, r in zip(obj["cpt"], obj["arities"])),
        intervention_dist=tuple(np.asarray(d, dtype=float) for d in obj["intervention_dist"]),
        name=obj.get("name", ""),
    )


def read_network(path) -> CategoricalNetwork:
    with open(path) as fh:
        return network_from_json(json.load(fh))


def dumps_network(net: CategoricalNetwork) -> str:
    """JSON text with one top-level key per line and compact values."""
    obj = net.to_json()
    lines = [f"  {json.dumps(k)}: {json.dumps(v)}" for k, v in obj.items()]
    return "{\n" + ",\n".join(lines) + "\n}\n"


def write_network(net: CategoricalNetwork, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_network(net))


@dataclass(frozen=True, eq=False)
class InterventionalDataset:
    """Rows of node states plus a per-row mask of manipulated nodes."""
    arities: tuple[int, ...]
    states: np.ndarray
    manipulated: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.int64).reshape(-1, len(self.arities))
        manip = np.asarray(self.manipulated, dtype=bool).reshape(states.shape)
        if states.size and (np.any(states < 0) or np.any(states >= np.asarray(self.arities))):
            raise ValidationError("state value outside its node's arity")
        states.flags.writeable = False
        manip.flags.writeable = False
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "manipulated", manip)

    @classmethod
    def empty(cls, arities: Sequence[int]) -> "InterventionalDataset":
        v = len(arities)
        return cls(tuple(arities), np.zeros((0, v), dtype=np.int64), np.zeros((0, v), dtype=bool))

    @classmethod
    def from_rows(cls, arities: Sequence[int], rows: Iterable[tuple[Sequence[int], Iterable[int]]]):
        states, manip = [], []
        v = len(arities)
        for st, targets in rows:
            states.append(list(st))
            m = [False] * v
            for t in targets:
                m[t] = True
            manip.append(m)
        if not states:
            return cls.empty(arities)
        return cls(tuple(arities), np.array(states), np.array(manip))

    @property
    def num_nodes(self) -> int:
        return len(self.arities)

    def __len__(self) -> int:
        return self.states.shape[0]

    def rows(self):
        for st, m in zip(self.states, self.manipulated):
            yield tuple(int(x) for x in st), frozenset(np.flatnonzero(m).tolist())

    def append(self, other: "InterventionalDataset") -> "InterventionalDataset":
        if tuple(other.arities) != tuple(self.arities):
            raise DimensionError("cannot append datasets with different arities")
        return InterventionalDataset(
            self.arities,
            np.concatenate([self.states, other.states]),
            np.concatenate([self.manipulated, other.manipulated]),
        )

    def permuted(self, order: Sequence[int]) -> "InterventionalDataset":
        idx = np.asarray(order)
        return InterventionalDataset(self.arities, self.states[idx], self.manipulated[idx])

    def single_targets(self) -> np.ndarray:
        """Per-row manipulated node, -1 when observational."""
        counts = self.manipulated.sum(axis=1)
        if np.any(counts > 1):
            raise ValidationError("rows with more than one manipulated node cannot be "
                                  "written in single-target form")
        out = np.full(len(self), -1, dtype=np.int64)
        r, c = np.nonzero(self.manipulated)
        out[r] = c
        return out


def write_dataset(data: InterventionalDataset, path) -> None:
    targets = data.single_targets()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"X{i}" for i in range(data.num_nodes)] + ["target"])
        for st, t in zip(data.states.tolist(), targets.tolist()):
            w.writerow(st + [t])


def read_dataset(path, arities: Sequence[int] | None = None) -> InterventionalDataset:
    """Read the CSV dataset format; arities default to max observed state + 1 (at least 2)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "target":
            raise ValidationError("last column must be 'target'")
        v = len(header) - 1
        if header[:-1] != [f"X{i}" for i in range(v)]:
            raise ValidationError("columns must be X0..X{V-1} followed by target")
        rows = [[int(x) for x in line] for line in reader if line]
    arr = np.array(rows, dtype=np.int64).reshape(-1, v + 1)
    states, targets = arr[:, :v], arr[:, v]
    if np.any((targets < -1) | (targets >= v)):
        raise ValidationError("target column must be -1 or a node index")
    manip = np.zeros(states.shape, dtype=bool)
    hit = targets >= 0
    manip[np.flatnonzero(hit), targets[hit]] = True
    if arities is None:
        top = states.max(axis=0) + 1 if len(states) else np.full(v, 2)
        arities = tuple(int(max(2, a)) for a in top)
    return InterventionalDataset(tuple(int(a) for a in arities), states, manip)


def _sample_categorical(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw per row of ``probs`` (n x r)."""
    u = rng.random(probs.shape[0])
    cdf = np.cumsum(probs, axis=1)
    cdf[:, -1] = 1.0
    return (u[:, None] >= cdf).sum(axis=1)


def _draw(net: CategoricalNetwork, spec: InterventionSpec, n: int,
          rng: np.random.Generator) -> np.ndarray:
    v = net.num_nodes
    states = np.zeros((n, v), dtype=np.int64)
    if n == 0:
        return states
    for i in topological_order(net.dag):
        mode = spec.modes.get(i)
        if isinstance(mode, FixedValue):
            states[:, i] = mode.state
            continue
        if isinstance(mode, Distribution):
            probs = np.broadcast_to(np.asarray(mode.probs, dtype=float), (n, net.arities[i]))
        else:
            j = np.zeros(n, dtype=np.int64)
            radix = 1
            for p in bits(net.dag.parents[i]):
                j += states[:, p] * radix
                radix *= net.arities[p]
            probs = net.cpt[i][j]
        states[:, i] = _sample_categorical(probs, rng)
    return states


def draw_row(net: CategoricalNetwork, spec: InterventionSpec,
             rng: np.random.Generator) -> tuple[tuple[int, ...], frozenset]:
    spec.validate(net.arities)
    st = _draw(net, spec, 1, rng)[0]
    return tuple(int(x) for x in st), spec.targets


def generate_dataset(net: CategoricalNetwork, spec: InterventionSpec, n: int,
                     seed) -> InterventionalDataset:
    if n < 0:
        raise ValueError("n must be nonnegative")
    spec.validate(net.arities)
    rng = np.random.default_rng(seed)
    states = _draw(net, spec, n, rng)
    manip = np.zeros(states.shape, dtype=bool)
    for t in spec.targets:
        manip[:, t] = True
    return InterventionalDataset(net.arities, states, manip)


def log_joint(net: CategoricalNetwork, row: Sequence[int], manipulated: Iterable[int] = (),
              spec: InterventionSpec | None = None) -> float:
    """Log-probability of a full joint state with the given nodes manipulated.

    Manipulated nodes use the network's intervention distribution unless a
    spec is given, in which case the spec's mode is used (a fixed value is a
    point mass).
    """
    manip = set(manipulated) if spec is None else set(spec.targets)
    total = 0.0
    for i in range(net.num_nodes):
        x = int(row[i])
        if i in manip:
            mode = spec.modes[i] if spec is not None else None
            if isinstance(mode, FixedValue):
                p = 1.0 if x == mode.state else 0.0
            elif isinstance(mode, Distribution):
                p = mode.probs[x]
            else:
                p = net.intervention_dist[i][x]
        else:
            p = net.cpt[i][parent_config_index(row, net.dag.parents[i], net.arities), x]
        if p <= 0:
            return -math.inf
        total += math.log(p)
    return total


def random_network(num_nodes: int, arities: int | Sequence[int], edge_prob: float,
                   seed, name: str = "") -> CategoricalNetwork:
    """Random order, forward edges with probability ``edge_prob``, Dirichlet(1) CPT rows."""
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError("edge_prob must be in [0, 1]")
    if isinstance(arities, int):
        arities = (arities,) * num_nodes
    arities = tuple(int(a) for a in arities)
    rng = np.random.default_rng(seed)
    order = rng.permutation(num_nodes)
    edges = []
    for a in range(num_nodes):
        for b in range(a + 1, num_nodes):
            if rng.random() < edge_prob:
                edges.append((int(order[a]), int(order[b])))
    dag = dag_from_edges(num_nodes, edges)
    cpt = []
    for i in range(num_nodes):
        q = num_parent_configs(dag.parents[i], arities)
        cpt.append(rng.dirichlet(np.ones(arities[i]), size=q))
    idist = tuple(rng.dirichlet(np.ones(r)) for r in arities)
    return CategoricalNetwork(dag, arities, tuple(cpt), idist, name=name)
