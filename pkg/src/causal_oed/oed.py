"""Entropy-based intervention selection and the sequential experiment loop.

For a candidate node ``e`` every posterior graph is mapped to a partition
value (its post-intervention Markov equivalence class, child set, descendant
set or parent set with respect to ``e``). The criterion is the plug-in
entropy of the posterior mass over those values; the node with the largest
entropy is intervened on next.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .dp import dp_edge_marginals
from .errors import ExhaustedError, UndefinedError, ValidationError
from .graph import Dag, intervention_surgery, mec_key
from .metrics import hamming, median_probability_graph, plugin_entropy, tpr
from .network import (CategoricalNetwork, Distribution, FixedValue, InterventionalDataset,
                      InterventionSpec, generate_dataset)
from .posterior import (GraphPrior, McmcConfig, PosteriorSamples, edge_probabilities,
                        exact_posterior, mcmc_sample)
from .scoring import BDeuConfig, FamilyScoreCache
from .seeds import derive_seed


class PartitionScheme(str, enum.Enum):
    MEC = "mec"
    CHILD_SET = "cs"
    DESCENDANT_SET = "ds"
    PARENT_SET = "ps"


POLICY_KINDS = ("entropy", "pwc", "random", "fixed", "dp")


@dataclass(frozen=True)
class SelectionPolicy:
    """How the next intervention is chosen.

    ``entropy`` needs a partition scheme; ``pwc`` sums binary edge entropies
    over MCMC samples; ``dp`` applies the same pairwise criterion to exact
    order-modular edge marginals instead of samples; ``fixed`` walks a
    preset sequence.
    """
    kind: str
    scheme: PartitionScheme | None = None
    sequence: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValidationError(f"unknown policy kind {self.kind!r}")
        if self.kind == "entropy":
            if self.scheme is None:
                raise ValidationError("entropy policy needs a partition scheme")
            object.__setattr__(self, "scheme", PartitionScheme(self.scheme))
        if self.kind == "fixed" and not self.sequence:
            raise ValidationError("fixed policy needs a nonempty sequence")

    @classmethod
    def parse(cls, text: str) -> "SelectionPolicy":
        """``mec|cs|ds|ps|pwc|dp|random`` or ``fixed:3,1,2``."""
        t = text.strip().lower()
        if t in ("mec", "cs", "ds", "ps"):
            return cls("entropy", PartitionScheme(t))
        if t in ("pwc", "random", "dp"):
            return cls(t)
        if t.startswith("fixed:"):
            return cls("fixed", sequence=tuple(int(x) for x in t[6:].split(",") if x.strip()))
        raise ValidationError(f"unknown policy {text!r}")

    @property
    def label(self) -> str:
        if self.kind == "entropy":
            return self.scheme.value
        if self.kind == "fixed":
            return "fixed:" + ",".join(map(str, self.sequence))
        return self.kind

    @property
    def scores_candidates(self) -> bool:
        return self.kind in ("entropy", "pwc", "dp")


@dataclass(frozen=True)
class OedConfig:
    candidates: tuple[int, ...]
    allow_repeat: bool = False
    entropy_tolerance: float | None = None
    max_experiments: int = 7
    n_obs: int = 1000
    n_intv: int = 1000
    intervention_value: int | str = 0
    posterior: str = "mcmc"

    def __post_init__(self):
        problems = []
        if self.max_experiments < 1:
            problems.append("max_experiments must be >= 1")
        if self.n_obs < 1 or self.n_intv < 1:
            problems.append("n_obs and n_intv must be >= 1")
        if not self.candidates:
            problems.append("candidates must be nonempty")
        if len(set(self.candidates)) != len(self.candidates):
            problems.append("candidates must be distinct")
        if not (isinstance(self.intervention_value, int) or self.intervention_value == "dist"):
            problems.append("intervention_value must be a state index or 'dist'")
        if self.posterior not in ("mcmc", "exact"):
            problems.append("posterior must be 'mcmc' or 'exact'")
        if problems:
            raise ValidationError(problems)


def partition_value(scheme: PartitionScheme | str, g: Dag, e: int):
    scheme = PartitionScheme(scheme)
    if scheme is PartitionScheme.MEC:
        return mec_key(intervention_surgery(g, e))
    if scheme is PartitionScheme.CHILD_SET:
        return g.children_mask(e)
    if scheme is PartitionScheme.DESCENDANT_SET:
        return g.descendants_mask(e)
    return g.parents[e]


def criterion_entropy(samples: PosteriorSamples, scheme: PartitionScheme | str, e: int) -> float:
    """Plug-in entropy (nats) of the posterior mass over partition values."""
    mass: dict = {}
    for g, w in zip(samples.graphs, samples.weights):
        y = partition_value(scheme, g, e)
        mass[y] = mass.get(y, 0.0) + w
    return plugin_entropy(list(mass.values()))


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log(p) + (1 - p) * math.log(1 - p))


def pwc_score(samples: PosteriorSamples | None, e: int, edge_probs=None) -> float:
    """Sum over v != e of the binary entropy of the edge e -> v."""
    P = edge_probabilities(samples) if edge_probs is None else np.asarray(edge_probs)
    return sum(binary_entropy(float(P[e, v])) for v in range(P.shape[0]) if v != e)


def candidate_scores(samples: PosteriorSamples | None, policy: SelectionPolicy,
                     candidates: Sequence[int], edge_probs=None) -> dict[int, float]:
    if policy.kind == "entropy":
        return {e: criterion_entropy(samples, policy.scheme, e) for e in candidates}
    if policy.kind in ("pwc", "dp"):
        P = edge_probabilities(samples) if edge_probs is None else edge_probs
        return {e: pwc_score(None, e, P) for e in candidates}
    return {}


def eligible_candidates(cfg: OedConfig, history: Sequence[int]) -> list[int]:
    if cfg.allow_repeat:
        return sorted(cfg.candidates)
    done = set(history)
    return sorted(e for e in cfg.candidates if e not in done)


def select_next(samples: PosteriorSamples | None, policy: SelectionPolicy, cfg: OedConfig,
                history: Sequence[int], rng: np.random.Generator | None = None,
                scores: dict[int, float] | None = None, edge_probs=None) -> int:
    """Next node to intervene on. Argmax ties go to the smallest node index."""
    eligible = eligible_candidates(cfg, history)
    if policy.kind == "fixed":
        if cfg.allow_repeat:
            pos = len(history)
            seq = policy.sequence[pos:pos + 1]
        else:
            done = set(history)
            seq = [e for e in policy.sequence if e not in done]
        if not seq:
            raise ExhaustedError("fixed sequence exhausted")
        return seq[0]
    if not eligible:
        raise ExhaustedError("no eligible intervention candidates remain")
    if policy.kind == "random":
        if rng is None:
            raise ValueError("random policy needs an rng")
        return eligible[int(rng.integers(len(eligible)))]
    if scores is None:
        scores = candidate_scores(samples, policy, eligible, edge_probs)
    best = eligible[0]
    for e in eligible[1:]:
        if scores[e] > scores[best]:
            best = e
    return best


@dataclass
class ExperimentRecord:
    experiment: int
    chosen_node: int
    hamming: int
    tpr: float
    entropy_nats: float
    n_distinct_graphs: int
    n_rows: int
    data_seed: int
    posterior_seed: int
    scores: dict[int, float] = field(default_factory=dict)
    collapsed_fallback: bool = False


@dataclass
class ExperimentLog:
    policy: str
    seed: int
    records: list[ExperimentRecord] = field(default_factory=list)
    stop_reason: str = ""

    def to_json(self) -> dict:
        recs = []
        for r in self.records:
            d = asdict(r)
            d["scores"] = {str(k): v for k, v in sorted(r.scores.items())}
            recs.append(d)
        return {"policy": self.policy, "seed": self.seed, "stop_reason": self.stop_reason,
                "records": recs}

    @property
    def chosen_nodes(self) -> list[int]:
        return [r.chosen_node for r in self.records if r.chosen_node >= 0]


def intervention_for(net: CategoricalNetwork, e: int, value: int | str) -> InterventionSpec:
    if value == "dist":
        return InterventionSpec({e: Distribution(tuple(net.intervention_dist[e].tolist()))})
    return InterventionSpec({e: FixedValue(int(value))})


def _posterior(data, policy, cfg, mcmc_cfg, seed, score_cfg):
    """Posterior samples (or None for the DP learner) and the edge-probability matrix."""
    cache = FamilyScoreCache(data, score_cfg)
    if policy.kind == "dp":
        em = dp_edge_marginals(data, mcmc_cfg.max_parents, score_cfg, cache)
        return None, em.probs
    if cfg.posterior == "exact":
        samples = exact_posterior(data, GraphPrior.uniform(), cfg=score_cfg, cache=cache)
    else:
        mc = McmcConfig(mcmc_cfg.n_iterations, mcmc_cfg.burn_in, mcmc_cfg.global_move_prob,
                        mcmc_cfg.max_parents, seed)
        samples = mcmc_sample(data, GraphPrior.uniform(), mc, score_cfg, cache)
    return samples, edge_probabilities(samples)


def run_sequential(truth: CategoricalNetwork, policy: SelectionPolicy, cfg: OedConfig,
                   mcmc_cfg: McmcConfig = McmcConfig(), seed: int = 0,
                   score_cfg: BDeuConfig = BDeuConfig()) -> ExperimentLog:
    """Observational round, then repeatedly score, select, intervene and append.

    Experiment 1 is observational. Stops when the posterior entropy estimate
    drops below ``cfg.entropy_tolerance``, after ``cfg.max_experiments``
    rounds, or when no eligible candidate is left.
    """
    for e in cfg.candidates:
        if not 0 <= e < truth.num_nodes:
            raise ValidationError(f"candidate {e} out of range")
    log = ExperimentLog(policy.label, int(seed))
    policy_rng = np.random.default_rng(derive_seed(seed, 0, "policy"))
    data_seed = derive_seed(seed, 1, "data")
    data = generate_dataset(truth, InterventionSpec.observational(), cfg.n_obs, data_seed)
    chosen = -1
    history: list[int] = []
    for k in range(1, cfg.max_experiments + 1):
        post_seed = derive_seed(seed, k, "mcmc")
        samples, P = _posterior(data, policy, cfg, mcmc_cfg, post_seed, score_cfg)
        est = median_probability_graph(P)
        try:
            rate = tpr(est, truth.dag)
        except UndefinedError:
            rate = math.nan
        ent = plugin_entropy(samples.weights) if samples is not None else math.nan
        rec = ExperimentRecord(
            experiment=k, chosen_node=chosen, hamming=hamming(est, truth.dag), tpr=rate,
            entropy_nats=ent, n_distinct_graphs=len(samples.graphs) if samples else 0,
            n_rows=len(data), data_seed=data_seed, posterior_seed=post_seed)
        log.records.append(rec)
        if cfg.entropy_tolerance is not None and ent < cfg.entropy_tolerance:
            log.stop_reason = "entropy_tolerance"
            break
        if k == cfg.max_experiments:
            log.stop_reason = "max_experiments"
            break
        eligible = eligible_candidates(cfg, history)
        scores = candidate_scores(samples, policy, eligible, P) if policy.scores_candidates else {}
        try:
            chosen = select_next(samples, policy, cfg, history, policy_rng, scores, P)
        except ExhaustedError:
            log.stop_reason = "exhausted"
            break
        rec.scores = scores
        rec.collapsed_fallback = bool(scores) and all(s == 0.0 for s in scores.values())
        history.append(chosen)
        data_seed = derive_seed(seed, k + 1, "data")
        new = generate_dataset(truth, intervention_for(truth, chosen, cfg.intervention_value),
                               cfg.n_intv, data_seed)
        data = data.append(new)
    return log


def manipulated_history(data: InterventionalDataset) -> list[int]:
    return sorted(set(np.nonzero(data.manipulated)[1].tolist()))


def recommend(data: InterventionalDataset, policy: SelectionPolicy, cfg: OedConfig,
              mcmc_cfg: McmcConfig = McmcConfig(),
              score_cfg: BDeuConfig = BDeuConfig()) -> list[tuple[int, float]]:
    """Rank the eligible candidates for the next experiment given existing data."""
    if len(data) == 0:
        raise ValidationError("recommend needs a nonempty dataset")
    if not policy.scores_candidates:
        raise ValidationError(f"policy {policy.label!r} does not score candidates")
    eligible = eligible_candidates(cfg, manipulated_history(data))
    if not eligible:
        raise ExhaustedError("every candidate has already been manipulated")
    samples, P = _posterior(data, policy, cfg, mcmc_cfg, mcmc_cfg.seed, score_cfg)
    scores = candidate_scores(samples, policy, eligible, P)
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
