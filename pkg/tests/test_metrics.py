import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causal_oed.errors import DimensionError, UndefinedError
from causal_oed.fixtures import fixture
from causal_oed.graph import DirectedGraph, dag_from_edges, enumerate_dags
from causal_oed.metrics import (aggregate, hamming, median_probability_graph, plugin_entropy,
                                posterior_entropy_estimate, tpr)
from causal_oed.network import InterventionalDataset
from causal_oed.posterior import PosteriorSamples, exact_posterior


def test_median_graph_examples():
    assert median_probability_graph(np.zeros((3, 3))).edges == frozenset()
    P = np.zeros((2, 2))
    P[0, 1] = 0.5
    assert median_probability_graph(P).edges == {(0, 1)}
    P[1, 0] = 0.6
    P[0, 1] = 0.6
    assert median_probability_graph(P).edges == {(0, 1), (1, 0)}


def test_hamming_examples():
    t = dag_from_edges(3, [(0, 1), (1, 2)])
    assert hamming(t, t) == 0
    assert hamming(dag_from_edges(3, [(0, 1), (1, 2), (0, 2)]), t) == 1
    assert hamming(dag_from_edges(3, [(1, 0), (1, 2)]), t) == 2
    with pytest.raises(DimensionError):
        hamming(dag_from_edges(2, []), t)


def test_tpr_examples():
    t = dag_from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    assert tpr(t, t) == 1.0
    assert tpr(DirectedGraph(5, frozenset()), t) == 0.0
    est = DirectedGraph(5, frozenset({(0, 1), (1, 2), (2, 3), (4, 0), (0, 2)}))
    assert tpr(est, t) == 0.75
    with pytest.raises(UndefinedError):
        tpr(t, dag_from_edges(5, []))


def test_entropy_examples():
    g = dag_from_edges(2, [(0, 1)])
    h = dag_from_edges(2, [])
    assert posterior_entropy_estimate(PosteriorSamples.from_graphs([g] * 4)) == 0.0
    assert posterior_entropy_estimate(PosteriorSamples.from_graphs([g, h])) == pytest.approx(math.log(2))
    ex = exact_posterior(InterventionalDataset.empty((2, 2, 2)))
    assert posterior_entropy_estimate(ex) == pytest.approx(math.log(25), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 20), min_size=1, max_size=25))
def test_entropy_bounded_by_log_support(counts):
    h = plugin_entropy(counts)
    assert -1e-12 <= h <= math.log(len(counts)) + 1e-12
    if len(set(counts)) == 1:
        assert h == pytest.approx(math.log(len(counts)), abs=1e-12)
    elif len(counts) > 1:
        assert h < math.log(len(counts))


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_perturbations_of_fixture(data):
    truth = fixture("tree8").dag
    true_edges = set(truth.edges)
    all_pairs = [(u, v) for u in range(8) for v in range(8) if u != v]
    drop = data.draw(st.sets(st.sampled_from(sorted(true_edges))))
    add = data.draw(st.sets(st.sampled_from([p for p in all_pairs if p not in true_edges]),
                            max_size=10))
    est = DirectedGraph(8, frozenset((true_edges - drop) | add))
    assert hamming(est, truth) == len(drop) + len(add)
    assert tpr(est, truth) == pytest.approx(1 - len(drop) / len(true_edges))
    without_fp = DirectedGraph(8, frozenset(true_edges - drop))
    assert tpr(without_fp, truth) == tpr(est, truth)
    assert (hamming(est, truth) == 0) == (est.edges == frozenset(true_edges))
    assert hamming(est, truth) <= 8 * 7


def _log(values):
    return SimpleNamespace(records=[SimpleNamespace(experiment=k + 1, hamming=v, tpr=1.0,
                                                    entropy_nats=0.0)
                                    for k, v in enumerate(values)])


def test_aggregate_examples():
    rows = aggregate([_log([2]), _log([4])], metrics=("hamming",))
    assert rows[0].mean == 3.0 and rows[0].se == 1.0 and not rows[0].degenerate
    rows = aggregate([_log([5, 3])] * 3, metrics=("hamming",))
    assert all(r.se == 0.0 for r in rows)
    rows = aggregate([_log([5])], metrics=("hamming",))
    assert rows[0].se == 0.0 and rows[0].degenerate and rows[0].n_sim == 1


def test_aggregate_tolerates_early_stop_and_nan():
    logs = [_log([4, 2, 1]), _log([6])]
    logs[0].records[0].tpr = math.nan
    rows = {(r.experiment, r.metric): r for r in aggregate(logs)}
    assert rows[(1, "hamming")].n_sim == 2
    assert rows[(2, "hamming")].n_sim == 1
    assert rows[(1, "tpr")].n_sim == 1
    assert len(enumerate_dags(2)) == 3
