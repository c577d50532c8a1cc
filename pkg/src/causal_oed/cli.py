"""Command-line entry point: ``causal-oed <command> ...``."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import CausalOedError, DimensionError
from .graph import intervention_surgery, mec_key, read_graph
from .harness import load_study, run_study
from .metrics import plugin_entropy
from .network import read_dataset
from .oed import OedConfig, SelectionPolicy, manipulated_history, recommend
from .posterior import GraphPrior, McmcConfig, edge_probabilities, exact_posterior, mcmc_sample
from .scoring import BDeuConfig, log_marginal_likelihood


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _emit(obj, out_path=None) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_data(args):
    data = read_dataset(args.data, args.arities)
    expected = getattr(args, "network_nodes", None)
    if expected is not None and data.num_nodes != expected:
        raise DimensionError(f"dataset has {data.num_nodes} node columns, expected {expected}")
    return data


def _mcmc_config(args) -> McmcConfig:
    burn = args.burn_in if args.burn_in is not None else (args.mcmc_iters * 3) // 5
    return McmcConfig(args.mcmc_iters, burn, args.global_move_prob, args.max_parents, args.seed)


def cmd_simulate(args) -> int:
    cfg = load_study(args.config)
    res = run_study(cfg, args.out)
    print(f"wrote {res.metrics_path} and {res.aggregate_path}")
    return 0


def cmd_recommend(args) -> int:
    data = _load_data(args)
    cands = args.candidates if args.candidates else tuple(range(data.num_nodes))
    bad = [e for e in cands if not 0 <= e < data.num_nodes]
    if bad:
        raise DimensionError(f"candidates {bad} out of range")
    policy = SelectionPolicy.parse(args.scheme)
    cfg = OedConfig(tuple(cands), allow_repeat=args.allow_repeat)
    ranking = recommend(data, policy, cfg, _mcmc_config(args),
                        BDeuConfig(args.intervention_term))
    _emit({"scheme": args.scheme, "history": manipulated_history(data),
           "ranking": [{"node": e, "score": s} for e, s in ranking]}, args.out)
    return 0


def cmd_score(args) -> int:
    data = _load_data(args)
    g = read_graph(args.graph)
    if g.num_nodes != data.num_nodes:
        raise DimensionError(f"graph has {g.num_nodes} nodes, dataset has {data.num_nodes}")
    lml = log_marginal_likelihood(data, g, BDeuConfig(args.intervention_term))
    _emit({"log_marginal_likelihood": lml, "n_rows": len(data)})
    return 0


def cmd_posterior(args) -> int:
    data = _load_data(args)
    score_cfg = BDeuConfig(args.intervention_term)
    if args.exact:
        samples = exact_posterior(data, GraphPrior.uniform(), cfg=score_cfg)
    else:
        samples = mcmc_sample(data, GraphPrior.uniform(), _mcmc_config(args), score_cfg)
    order = np.argsort(-samples.weights, kind="stable")[:args.top]
    P = edge_probabilities(samples)
    if args.edges_csv:
        np.savetxt(args.edges_csv, P, delimiter=",", fmt="%.17g")
    _emit({
        "provenance": samples.provenance,
        "n_distinct_graphs": len(samples.graphs),
        "entropy_nats": plugin_entropy(samples.weights),
        "edge_probabilities": P.tolist(),
        "top_graphs": [{"edges": [list(e) for e in samples.graphs[i].edges],
                        "weight": float(samples.weights[i])} for i in order],
    }, args.out)
    return 0


def cmd_mec(args) -> int:
    g = read_graph(args.graph)
    if args.intervene is not None:
        g = intervention_surgery(g, args.intervene)
    _emit(mec_key(g).to_json())
    return 0


def _add_data_args(p, mcmc: bool) -> None:
    p.add_argument("--data", required=True, help="dataset CSV (X0..X{V-1},target)")
    p.add_argument("--arities", type=_int_list, default=None,
                   help="comma-separated arities; default is inferred from the data")
    p.add_argument("--intervention-term", action="store_true",
                   help="also score manipulated values under the intervention prior")
    if mcmc:
        p.add_argument("--mcmc-iters", type=int, default=250_000)
        p.add_argument("--burn-in", type=int, default=None,
                       help="default: 60%% of --mcmc-iters")
        p.add_argument("--global-move-prob", type=float, default=0.1)
        p.add_argument("--max-parents", type=int, default=5)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="write JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="causal-oed",
                                 description="Entropy-based intervention design for "
                                             "causal structure learning.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a replicated study from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("recommend", help="rank candidate interventions for existing data")
    _add_data_args(p, mcmc=True)
    p.add_argument("--network-nodes", type=int, required=True)
    p.add_argument("--scheme", choices=("mec", "cs", "ds", "ps", "pwc", "dp"), default="mec")
    p.add_argument("--candidates", type=_int_list, default=None)
    p.add_argument("--allow-repeat", action="store_true")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("score", help="BDeu log marginal likelihood of a graph")
    _add_data_args(p, mcmc=False)
    p.add_argument("--graph", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("posterior", help="sample (or enumerate) the graph posterior")
    _add_data_args(p, mcmc=True)
    p.add_argument("--exact", action="store_true", help="enumerate all DAGs (V <= 5)")
    p.add_argument("--top", type=int, default=10, help="number of graphs to list")
    p.add_argument("--edges-csv", default=None, help="also write the V x V edge matrix as CSV")
    p.set_defaults(func=cmd_posterior)

    p = sub.add_parser("mec", help="print the Markov equivalence class key of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--intervene", type=int, default=None,
                   help="cut the edges into this node first")
    p.set_defaults(func=cmd_mec)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CausalOedError, OSError, KeyError, IndexError, ValueError) as exc:
        print(f"causal-oed {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
