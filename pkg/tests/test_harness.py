import csv
import json
import math

import numpy as np
import pytest

from causal_oed.errors import ParseError, ValidationError
from causal_oed.graph import dag_from_edges
from causal_oed.harness import (METRICS_COLUMNS, StudyConfig, dump_study, load_study,
                                parse_study, run_study, worker_count)
from causal_oed.network import CategoricalNetwork, write_network

SMALL_MCMC = {"n_iterations": 2000, "burn_in": 500}


@pytest.fixture
def net3(tmp_path):
    dag = dag_from_edges(3, [(0, 1), (1, 2)])
    cpt = (np.array([[0.4, 0.6]]), np.array([[0.8, 0.2], [0.2, 0.8]]),
           np.array([[0.7, 0.3], [0.1, 0.9]]))
    net = CategoricalNetwork(dag, (2, 2, 2), cpt, (np.array([0.5, 0.5]),) * 3, name="net3")
    p = tmp_path / "net3.json"
    write_network(net, p)
    return p


def write(tmp_path, obj, name="study.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def test_minimal_config_defaults(tmp_path):
    cfg = load_study(write(tmp_path, {"truth": "chain8", "n_exp": 7}))
    assert cfg.n_sim == 50 and cfg.n_obs == 1000 and cfg.n_intv == 1000
    assert cfg.entropy_tolerance is None
    assert cfg.mcmc_config().n_iterations == 250_000
    assert cfg.mcmc_config().burn_in == 150_000
    assert cfg.oed_config(8).candidates == tuple(range(8))


def test_unknown_key_named(tmp_path):
    with pytest.raises(ValidationError, match="n_observations"):
        load_study(write(tmp_path, {"truth": "chain8", "n_exp": 2, "n_observations": 5}))
    with pytest.raises(ValidationError, match="chains"):
        load_study(write(tmp_path, {"truth": "chain8", "n_exp": 2, "mcmc": {"chains": 2}}))


def test_multiple_violations_listed(tmp_path):
    with pytest.raises(ValidationError) as exc:
        load_study(write(tmp_path, {"truth": "chain9", "n_exp": 0, "n_sim": "many"}))
    msg = str(exc.value)
    assert "chain9" in msg and "n_exp" in msg and "n_sim" in msg
    assert len(exc.value.violations) == 3


def test_parse_error_location(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "truth": "chain8",\n  "n_exp": ,\n}')
    with pytest.raises(ParseError, match="line 3"):
        load_study(p)


def test_roundtrip(tmp_path, net3):
    cfg = load_study(write(tmp_path, {
        "truth": "net3.json", "n_exp": 3, "policies": ["ds", "pwc", "fixed:2,1"],
        "mcmc": SMALL_MCMC, "candidates": [1, 2], "master_seed": 9,
        "entropy_tolerance": 0.1, "intervention_value": "dist"}))
    out = tmp_path / "again.json"
    dump_study(cfg, out)
    assert load_study(out) == cfg
    assert dict(cfg.mcmc)["global_move_prob"] == 0.1


def test_candidates_checked_against_truth(tmp_path):
    with pytest.raises(ValidationError, match="out of range"):
        load_study(write(tmp_path, {"truth": "chain8", "n_exp": 2, "candidates": [9]}))
    with pytest.raises(ValidationError, match="mutually exclusive"):
        load_study(write(tmp_path, {"truth": "sachs11", "n_exp": 2, "candidates": [1],
                                    "sachs_candidates": True}))


def test_sachs_candidates_flag(tmp_path):
    cfg = load_study(write(tmp_path, {"truth": "sachs11", "n_exp": 2, "sachs_candidates": True}))
    assert cfg.oed_config(11).candidates == (1, 3, 6, 7, 8)


def test_worker_count_env():
    assert worker_count({"CAUSAL_OED_THREADS": "3"}) == 3
    assert worker_count({"CAUSAL_OED_THREADS": "0"}) == 1
    with pytest.raises(ValidationError):
        worker_count({"CAUSAL_OED_THREADS": "x"})


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_single_row_per_policy(tmp_path, net3):
    cfg = parse_study({"truth": str(net3), "n_exp": 1, "n_sim": 1, "n_obs": 50,
                       "policies": ["mec", "random"], "mcmc": SMALL_MCMC})
    res = run_study(cfg, tmp_path / "out", workers=1)
    rows = read_csv(res.metrics_path)
    assert len(rows) == 2
    assert tuple(rows[0]) == METRICS_COLUMNS
    assert {r["policy"] for r in rows} == {"entropy", "random"}
    assert json.loads((tmp_path / "out" / "status.json").read_text())["state"] == "complete"
    assert sorted(p.name for p in (tmp_path / "out" / "logs").iterdir()) == \
        ["mec_sim000.json", "random_sim000.json"]


def test_outputs_deterministic_and_worker_independent(tmp_path, net3):
    cfg = parse_study({"truth": str(net3), "n_exp": 3, "n_sim": 3, "n_obs": 40, "n_intv": 40,
                       "policies": ["mec", "random", "fixed:2,0"], "mcmc": SMALL_MCMC,
                       "master_seed": 4})
    a = run_study(cfg, tmp_path / "a", workers=1)
    b = run_study(cfg, tmp_path / "b", workers=1)
    c = run_study(cfg, tmp_path / "c", workers=2)
    for name in ("metrics.csv", "aggregate.csv"):
        ref = (tmp_path / "a" / name).read_bytes()
        assert (tmp_path / "b" / name).read_bytes() == ref
        assert (tmp_path / "c" / name).read_bytes() == ref
    for log in (tmp_path / "a" / "logs").iterdir():
        assert (tmp_path / "c" / "logs" / log.name).read_bytes() == log.read_bytes()
    assert a.logs.keys() == b.logs.keys() == c.logs.keys()


def test_aggregate_equals_recomputation(tmp_path, net3):
    cfg = parse_study({"truth": str(net3), "n_exp": 3, "n_sim": 4, "n_obs": 40, "n_intv": 40,
                       "policies": ["ds", "random"], "mcmc": SMALL_MCMC})
    res = run_study(cfg, tmp_path / "o", workers=1)
    metrics = read_csv(res.metrics_path)
    agg = read_csv(res.aggregate_path)
    for row in agg:
        vals = np.array([float(m[row["metric"]]) for m in metrics
                         if m["policy"] == row["policy"] and m["scheme"] == row["scheme"]
                         and m["experiment"] == row["experiment"]])
        vals = vals[~np.isnan(vals)]
        assert float(row["mean"]) == float(vals.mean())
        assert int(row["n_sim"]) == len(vals)
        if len(vals) > 1:
            assert float(row["se"]) == float(vals.std(ddof=1) / math.sqrt(len(vals)))


def test_chosen_nodes_respect_candidates(tmp_path):
    cfg = parse_study({"truth": "chain8", "n_exp": 3, "n_sim": 2, "n_obs": 100, "n_intv": 100,
                       "candidates": [2, 5], "policies": ["mec", "random"],
                       "mcmc": SMALL_MCMC})
    res = run_study(cfg, tmp_path / "o", workers=1)
    for log in res.logs.values():
        nodes = log.chosen_nodes
        assert set(nodes) <= {2, 5} and len(nodes) == len(set(nodes))


def test_common_random_numbers_across_policies(tmp_path, net3):
    cfg = parse_study({"truth": str(net3), "n_exp": 2, "n_sim": 2, "n_obs": 30,
                       "policies": ["mec", "random"], "mcmc": SMALL_MCMC})
    res = run_study(cfg, tmp_path / "o", workers=1)
    for sim in range(2):
        a, b = res.logs[(0, sim)].records[0], res.logs[(1, sim)].records[0]
        assert a.data_seed == b.data_seed and a.hamming == b.hamming


def test_failed_run_flags_status(tmp_path, monkeypatch):
    import causal_oed.harness as h
    cfg = parse_study({"truth": "chain8", "n_exp": 1, "n_sim": 1, "mcmc": SMALL_MCMC})

    def boom(task):
        raise RuntimeError("boom")
    monkeypatch.setattr(h, "_run_one", boom)
    with pytest.raises(RuntimeError):
        run_study(cfg, tmp_path / "o", workers=1)
    status = json.loads((tmp_path / "o" / "status.json").read_text())
    assert status["state"] == "failed" and "boom" in status["error"]


def test_study_config_is_frozen():
    cfg = StudyConfig(truth="chain8", n_exp=2)
    with pytest.raises(Exception):
        cfg.n_exp = 3


SMOKE_BUDGET_S = 120


def test_chain8_smoke_study_runtime(tmp_path):
    import time
    cfg = parse_study({"truth": "chain8", "n_sim": 5, "n_exp": 5, "n_obs": 1000,
                       "n_intv": 1000, "policies": ["mec"],
                       "mcmc": {"n_iterations": 50_000, "burn_in": 25_000}})
    t0 = time.perf_counter()
    res = run_study(cfg, tmp_path / "smoke", workers=1)
    dt = time.perf_counter() - t0
    assert len(read_csv(res.metrics_path)) == 25
    assert dt < SMOKE_BUDGET_S, f"smoke study took {dt:.1f}s"
