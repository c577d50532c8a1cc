import itertools
import math

import numpy as np
import pytest

from causal_oed.errors import DimensionError, ValidationError
from causal_oed.graph import dag_from_edges
from causal_oed.network import (CategoricalNetwork, Distribution, FixedValue,
                                InterventionalDataset, InterventionSpec, generate_dataset,
                                log_joint, network_from_json, parent_config_index,
                                random_network, read_dataset, read_network, write_dataset,
                                write_network)


def two_node(p_root=0.3, flip=0.1):
    dag = dag_from_edges(2, [(0, 1)])
    cpt = (np.array([[1 - p_root, p_root]]),
           np.array([[1 - flip, flip], [flip, 1 - flip]]))
    return CategoricalNetwork(dag, (2, 2), cpt, (np.array([0.5, 0.5]),) * 2)


def test_parent_config_index_lowest_parent_least_significant():
    ar = (3, 2, 4)
    # parents {0, 2}: index = x0 + 3 * x2
    assert parent_config_index((2, 1, 3), 0b101, ar) == 2 + 3 * 3
    assert parent_config_index((0, 1, 0), 0, ar) == 0


def test_bad_cpt_rejected():
    dag = dag_from_edges(2, [(0, 1)])
    with pytest.raises(ValidationError):
        CategoricalNetwork(dag, (2, 2), (np.array([[0.5, 0.6]]), np.eye(2)),
                           (np.array([0.5, 0.5]),) * 2)
    with pytest.raises(ValidationError):
        CategoricalNetwork(dag, (2, 2), (np.array([[0.5, 0.5]]), np.array([[1.0, 0.0]])),
                           (np.array([0.5, 0.5]),) * 2)
    with pytest.raises(DimensionError):
        CategoricalNetwork(dag, (2,), (np.array([[0.5, 0.5]]),), (np.array([0.5, 0.5]),))


def test_intervention_spec_validation():
    with pytest.raises(ValidationError):
        InterventionSpec.fixed(0, 5).validate((2, 2))
    with pytest.raises(ValidationError):
        InterventionSpec({1: Distribution((0.2, 0.2))}).validate((2, 2))
    InterventionSpec({1: Distribution((0.2, 0.8))}).validate((2, 2))


def test_generate_is_deterministic_and_seed_sensitive():
    net = two_node()
    a = generate_dataset(net, InterventionSpec.observational(), 200, 7)
    b = generate_dataset(net, InterventionSpec.observational(), 200, 7)
    c = generate_dataset(net, InterventionSpec.observational(), 200, 8)
    assert np.array_equal(a.states, b.states)
    assert not np.array_equal(a.states, c.states)
    assert not a.manipulated.any()


def test_fixed_intervention_sets_value_and_marks_rows():
    net = two_node()
    d = generate_dataset(net, InterventionSpec.fixed(1, 1), 100, 1)
    assert np.all(d.states[:, 1] == 1)
    assert d.manipulated[:, 1].all() and not d.manipulated[:, 0].any()


def test_intervention_breaks_dependence():
    net = two_node(p_root=0.5, flip=0.0)
    d = generate_dataset(net, InterventionSpec({1: Distribution((0.5, 0.5))}), 4000, 3)
    agree = np.mean(d.states[:, 0] == d.states[:, 1])
    assert abs(agree - 0.5) < 0.05
    obs = generate_dataset(net, InterventionSpec.observational(), 500, 3)
    assert np.all(obs.states[:, 0] == obs.states[:, 1])


def test_empirical_frequencies_match_log_joint():
    net = random_network(3, (2, 3, 2), 0.7, seed=4)
    n = 60000
    d = generate_dataset(net, InterventionSpec.observational(), n, 9)
    counts = {}
    for row in map(tuple, d.states.tolist()):
        counts[row] = counts.get(row, 0) + 1
    total_p = 0.0
    for row in itertools.product(range(2), range(3), range(2)):
        p = math.exp(log_joint(net, row))
        total_p += p
        assert abs(counts.get(row, 0) / n - p) < 4 * math.sqrt(p * (1 - p) / n) + 1e-3
    assert abs(total_p - 1.0) < 1e-12


def test_log_joint_under_intervention():
    net = two_node(p_root=0.3, flip=0.1)
    spec = InterventionSpec.fixed(1, 1)
    assert log_joint(net, (0, 1), [1], spec) == pytest.approx(math.log(0.7))
    assert log_joint(net, (0, 0), [1], spec) == -math.inf
    dspec = InterventionSpec({1: Distribution((0.25, 0.75))})
    assert log_joint(net, (1, 1), [1], dspec) == pytest.approx(math.log(0.3 * 0.75))


def test_dataset_csv_roundtrip(tmp_path):
    d = InterventionalDataset.from_rows((2, 3), [((0, 2), ()), ((1, 0), (1,)), ((1, 1), (0,))])
    p = tmp_path / "d.csv"
    write_dataset(d, p)
    assert p.read_text().splitlines()[0] == "X0,X1,target"
    back = read_dataset(p, (2, 3))
    assert np.array_equal(back.states, d.states)
    assert np.array_equal(back.manipulated, d.manipulated)
    assert read_dataset(p).arities == (2, 3)


def test_dataset_rejects_out_of_range_state():
    with pytest.raises(ValidationError):
        InterventionalDataset.from_rows((2, 2), [((0, 2), ())])


def test_append_and_empty():
    e = InterventionalDataset.empty((2, 2))
    assert len(e) == 0
    d = InterventionalDataset.from_rows((2, 2), [((0, 1), ())])
    assert len(e.append(d)) == 1
    with pytest.raises(DimensionError):
        d.append(InterventionalDataset.empty((2, 3)))


def test_network_json_roundtrip(tmp_path):
    net = random_network(5, 3, 0.5, seed=2, name="r5")
    p = tmp_path / "n.json"
    write_network(net, p)
    back = read_network(p)
    assert back.dag == net.dag and back.arities == net.arities and back.name == "r5"
    for a, b in zip(back.cpt, net.cpt):
        assert np.array_equal(a, b)


def test_network_unknown_key():
    obj = two_node().to_json()
    obj["cpts"] = obj.pop("cpt")
    with pytest.raises(ValidationError, match="cpts"):
        network_from_json(obj)


def test_random_network_deterministic():
    a = random_network(10, 2, 0.25, seed=10)
    b = random_network(10, 2, 0.25, seed=10)
    assert a.dag == b.dag
    assert all(np.array_equal(x, y) for x, y in zip(a.cpt, b.cpt))
    assert isinstance(FixedValue(0), FixedValue)
