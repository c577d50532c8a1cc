"""Study configuration and the replicated simulation driver."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ParseError, ValidationError
from .fixtures import FIXTURE_NAMES, SACHS_CANDIDATES, fixture
from .metrics import aggregate
from .network import CategoricalNetwork, read_network
from .oed import ExperimentLog, OedConfig, SelectionPolicy, run_sequential
from .posterior import McmcConfig
from .scoring import BDeuConfig
from .seeds import derive_seed

__all__ = ["StudyConfig", "MCMC_KEYS", "load_study", "parse_study", "dump_study",
           "run_study", "StudyResult", "derive_seed", "METRICS_COLUMNS", "THREADS_ENV"]

STUDY_VERSION = 1
THREADS_ENV = "CAUSAL_OED_THREADS"
MCMC_KEYS = ("n_iterations", "burn_in", "global_move_prob", "max_parents")
METRICS_COLUMNS = ("study", "policy", "scheme", "sim_index", "experiment", "chosen_node",
                   "hamming", "tpr", "entropy_nats")
AGGREGATE_COLUMNS = ("study", "policy", "scheme", "experiment", "metric", "mean", "se",
                     "n_sim", "degenerate")


@dataclass(frozen=True)
class StudyConfig:
    truth: str
    n_exp: int
    name: str = ""
    version: int = STUDY_VERSION
    truth_seed: int | None = None
    resample_truth: bool = False
    policies: tuple[str, ...] = ("mec", "random")
    n_sim: int = 50
    n_obs: int = 1000
    n_intv: int = 1000
    mcmc: tuple[tuple[str, float], ...] = (
        ("n_iterations", 250_000), ("burn_in", 150_000),
        ("global_move_prob", 0.1), ("max_parents", 5))
    candidates: tuple[int, ...] | None = None
    sachs_candidates: bool = False
    allow_repeat: bool = False
    master_seed: int = 0
    entropy_tolerance: float | None = None
    intervention_value: int | str = 0
    intervention_term: bool = False
    posterior: str = "mcmc"
    output_dir: str | None = None

    @property
    def study_name(self) -> str:
        return self.name or Path(self.truth).stem

    def mcmc_config(self, seed: int = 0) -> McmcConfig:
        m = dict(self.mcmc)
        return McmcConfig(int(m["n_iterations"]), int(m["burn_in"]),
                          float(m["global_move_prob"]), int(m["max_parents"]), seed)

    def selection_policies(self) -> list[SelectionPolicy]:
        return [SelectionPolicy.parse(p) for p in self.policies]

    def truth_network(self, sim_index: int = 0) -> CategoricalNetwork:
        if self.truth in FIXTURE_NAMES:
            seed = self.truth_seed
            if self.resample_truth:
                seed = derive_seed(self.master_seed, sim_index, "truth")
            return fixture(self.truth, seed)
        return read_network(self.truth)

    def oed_config(self, num_nodes: int) -> OedConfig:
        if self.candidates is not None:
            cands = self.candidates
        elif self.sachs_candidates:
            cands = SACHS_CANDIDATES
        else:
            cands = tuple(range(num_nodes))
        return OedConfig(tuple(cands), self.allow_repeat, self.entropy_tolerance, self.n_exp,
                         self.n_obs, self.n_intv, self.intervention_value, self.posterior)

    def to_json(self) -> dict:
        d = asdict(self)
        d["policies"] = list(self.policies)
        d["mcmc"] = dict(self.mcmc)
        d["candidates"] = None if self.candidates is None else list(self.candidates)
        return d


_FIELD_NAMES = {f.name for f in fields(StudyConfig)}


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def parse_study(obj, base_dir: str | os.PathLike | None = None) -> StudyConfig:
    """Validate a decoded config object, filling defaults.

    Every problem is collected so one error lists all of them.
    """
    if not isinstance(obj, dict):
        raise ValidationError("study config must be a JSON object")
    problems = [f"unknown key {k!r}" for k in sorted(set(obj) - _FIELD_NAMES)]
    for req in ("truth", "n_exp"):
        if req not in obj:
            problems.append(f"missing required key {req!r}")
    if problems:
        raise ValidationError(problems)

    kw = {}

    def check(key, ok, msg):
        if key in obj:
            if ok(obj[key]):
                kw[key] = obj[key]
            else:
                problems.append(f"{key}: {msg}")

    check("version", lambda x: x == STUDY_VERSION, f"only version {STUDY_VERSION} is supported")
    check("name", lambda x: isinstance(x, str), "expected a string")
    check("truth", lambda x: isinstance(x, str) and x, "expected a fixture name or network file")
    for key in ("n_exp", "n_sim", "n_obs", "n_intv"):
        check(key, lambda x: _is_int(x) and x >= 1, "expected an integer >= 1")
    check("truth_seed", lambda x: x is None or _is_int(x), "expected an integer or null")
    check("master_seed", _is_int, "expected an integer")
    for key in ("resample_truth", "sachs_candidates", "allow_repeat", "intervention_term"):
        check(key, lambda x: isinstance(x, bool), "expected true or false")
    check("entropy_tolerance", lambda x: x is None or _is_num(x), "expected a number or null")
    check("intervention_value", lambda x: x == "dist" or (_is_int(x) and x >= 0),
          "expected a state index or \"dist\"")
    check("posterior", lambda x: x in ("mcmc", "exact"), "expected \"mcmc\" or \"exact\"")
    check("output_dir", lambda x: x is None or isinstance(x, str), "expected a path or null")

    if "policies" in obj:
        pol = obj["policies"]
        if not isinstance(pol, list) or not pol or not all(isinstance(p, str) for p in pol):
            problems.append("policies: expected a nonempty list of policy names")
        else:
            labels = []
            for p in pol:
                try:
                    labels.append(SelectionPolicy.parse(p).label)
                except ValidationError as exc:
                    problems.append(f"policies: {exc}")
            if len(set(labels)) != len(labels):
                problems.append("policies: duplicate entries")
            kw["policies"] = tuple(labels)

    if "mcmc" in obj:
        m = obj["mcmc"]
        if not isinstance(m, dict):
            problems.append("mcmc: expected an object")
        else:
            bad = sorted(set(m) - set(MCMC_KEYS))
            problems += [f"mcmc: unknown key {k!r}" for k in bad]
            merged = dict(StudyConfig.mcmc)
            for k in MCMC_KEYS:
                if k in m:
                    ok = _is_num(m[k]) if k == "global_move_prob" else _is_int(m[k])
                    if not ok:
                        problems.append(f"mcmc.{k}: expected a number")
                    merged[k] = m[k]
            if not bad:
                try:
                    McmcConfig(int(merged["n_iterations"]), int(merged["burn_in"]),
                               float(merged["global_move_prob"]), int(merged["max_parents"]))
                except (ValidationError, TypeError, ValueError) as exc:
                    problems.append(f"mcmc: {exc}")
                kw["mcmc"] = tuple((k, merged[k]) for k in MCMC_KEYS)

    if "candidates" in obj:
        c = obj["candidates"]
        if c is None:
            kw["candidates"] = None
        elif isinstance(c, list) and c and all(_is_int(x) and x >= 0 for x in c):
            if len(set(c)) != len(c):
                problems.append("candidates: duplicate entries")
            kw["candidates"] = tuple(c)
        else:
            problems.append("candidates: expected a nonempty list of node indices or null")

    truth = kw.get("truth")
    if truth is not None and truth not in FIXTURE_NAMES:
        if not truth.endswith(".json"):
            problems.append(f"truth: unknown fixture {truth!r} (known: {', '.join(FIXTURE_NAMES)})")
        else:
            p = Path(truth)
            if not p.is_absolute() and base_dir is not None:
                p = Path(base_dir) / p
            kw["truth"] = str(p.resolve())
            if not p.exists():
                problems.append(f"truth: network file {str(p)!r} not found")
    if kw.get("resample_truth") and truth != "random10":
        problems.append("resample_truth: only meaningful for the random10 fixture")
    if kw.get("sachs_candidates") and kw.get("candidates") is not None:
        problems.append("sachs_candidates and candidates are mutually exclusive")
    if problems:
        raise ValidationError(problems)

    cfg = StudyConfig(**kw)
    try:
        net = cfg.truth_network()
        oc = cfg.oed_config(net.num_nodes)
    except Exception as exc:  # surfaced as a config problem
        raise ValidationError(f"truth: {exc}") from exc
    bad = [e for e in oc.candidates if e >= net.num_nodes]
    if bad:
        raise ValidationError(f"candidates: {bad} out of range for {net.num_nodes} nodes")
    return cfg


def load_study(path) -> StudyConfig:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_study(obj, Path(path).parent)


def dump_study(cfg: StudyConfig, path=None) -> str:
    text = json.dumps(cfg.to_json(), indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


# -- running -----------------------------------------------------------------

def _num(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def _policy_columns(policy: SelectionPolicy) -> tuple[str, str]:
    if policy.kind == "entropy":
        return "entropy", policy.scheme.value
    if policy.kind == "fixed":
        return policy.label, ""
    return policy.kind, ""


def _file_label(label: str) -> str:
    return label.replace(":", "-").replace(",", "_")


def _run_one(task) -> tuple[int, int, ExperimentLog]:
    cfg, p_idx, sim = task
    policy = cfg.selection_policies()[p_idx]
    truth = cfg.truth_network(sim)
    seed = derive_seed(cfg.master_seed, sim, "run")
    log = run_sequential(truth, policy, cfg.oed_config(truth.num_nodes), cfg.mcmc_config(),
                         seed, BDeuConfig(cfg.intervention_term))
    return p_idx, sim, log


def worker_count(env=None) -> int:
    env = os.environ if env is None else env
    cap = env.get(THREADS_ENV)
    if not cap:
        return os.cpu_count() or 1
    try:
        return max(1, int(cap))
    except ValueError:
        raise ValidationError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None


@dataclass
class StudyResult:
    output_dir: Path
    logs: dict[tuple[int, int], ExperimentLog] = field(default_factory=dict)

    @property
    def metrics_path(self) -> Path:
        return self.output_dir / "metrics.csv"

    @property
    def aggregate_path(self) -> Path:
        return self.output_dir / "aggregate.csv"


def metrics_csv(cfg: StudyConfig, logs: dict[tuple[int, int], ExperimentLog]) -> str:
    policies = cfg.selection_policies()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_COLUMNS)
    for (p_idx, sim) in sorted(logs):
        kind, scheme = _policy_columns(policies[p_idx])
        for r in logs[(p_idx, sim)].records:
            w.writerow([cfg.study_name, kind, scheme, sim, r.experiment, r.chosen_node,
                        r.hamming, _num(r.tpr), _num(r.entropy_nats)])
    return buf.getvalue()


def aggregate_csv(cfg: StudyConfig, logs: dict[tuple[int, int], ExperimentLog]) -> str:
    policies = cfg.selection_policies()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGGREGATE_COLUMNS)
    for p_idx, policy in enumerate(policies):
        kind, scheme = _policy_columns(policy)
        group = [logs[k] for k in sorted(logs) if k[0] == p_idx]
        for row in aggregate(group):
            w.writerow([cfg.study_name, kind, scheme, row.experiment, row.metric,
                        _num(row.mean), _num(row.se), row.n_sim, int(row.degenerate)])
    return buf.getvalue()


def _write_status(out: Path, state: str, **extra) -> None:
    (out / "status.json").write_text(json.dumps({"state": state, **extra}, indent=2) + "\n")


def run_study(cfg: StudyConfig, output_dir=None, workers: int | None = None) -> StudyResult:
    """Run every policy x replicate and write the study outputs.

    Writes ``metrics.csv``, ``aggregate.csv``, ``logs/<policy>_sim<k>.json``,
    the resolved ``study.json`` and ``status.json``. The status file says
    ``running`` until everything is written, and ``failed`` (with the error)
    if a replicate raised, so partial output directories are recognisable.
    Replicate ``k`` of every policy uses the same run seed, so policies are
    compared on common random numbers.
    """
    target = output_dir if output_dir is not None else cfg.output_dir
    if target is None:
        raise ValidationError("no output directory given")
    out = Path(target)
    out.mkdir(parents=True, exist_ok=True)
    (out / "logs").mkdir(exist_ok=True)
    _write_status(out, "running")
    dump_study(cfg, out / "study.json")
    tasks = [(cfg, p, s) for p in range(len(cfg.policies)) for s in range(cfg.n_sim)]
    workers = worker_count() if workers is None else max(1, workers)
    result = StudyResult(out)
    try:
        if workers == 1 or len(tasks) == 1:
            done = map(_run_one, tasks)
            for p_idx, sim, log in done:
                result.logs[(p_idx, sim)] = log
        else:
            with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
                for p_idx, sim, log in pool.map(_run_one, tasks):
                    result.logs[(p_idx, sim)] = log
    except BaseException as exc:
        _write_status(out, "failed", error=f"{type(exc).__name__}: {exc}",
                      completed=len(result.logs), total=len(tasks))
        raise
    policies = cfg.selection_policies()
    for (p_idx, sim), log in sorted(result.logs.items()):
        name = f"{_file_label(policies[p_idx].label)}_sim{sim:03d}.json"
        text = json.dumps(_nan_to_null(log.to_json()), indent=1, sort_keys=True,
                          default=_json_default)
        (out / "logs" / name).write_text(text + "\n")
    result.metrics_path.write_text(metrics_csv(cfg, result.logs))
    result.aggregate_path.write_text(aggregate_csv(cfg, result.logs))
    _write_status(out, "complete", completed=len(tasks), total=len(tasks))
    return result


def _nan_to_null(x):
    if isinstance(x, float) and math.isnan(x):
        return None
    if isinstance(x, dict):
        return {k: _nan_to_null(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_nan_to_null(v) for v in x]
    return x


def _json_default(x):
    if hasattr(x, "item"):
        return x.item()
    raise TypeError(f"cannot serialise {type(x).__name__}")
