"""Bayesian experimental design for learning causal structure from interventions."""
from .errors import (CausalOedError, CycleError, DimensionError, ExhaustedError, LimitError,
                     ParseError, SelfLoopError, UndefinedError, UnknownFixtureError,
                     ValidationError)
from .graph import (Dag, DirectedGraph, MecKey, dag_from_edges, enumerate_dags,
                    intervention_surgery, mec_key, relations)
from .network import (CategoricalNetwork, Distribution, FixedValue, InterventionalDataset,
                      InterventionSpec, generate_dataset, random_network)
from .scoring import BDeuConfig, log_marginal_likelihood, sequential_predictive_log_prob
from .dp import dp_edge_marginals
from .posterior import (GraphPrior, McmcConfig, PosteriorSamples, edge_probabilities,
                        exact_posterior, mcmc_sample)
from .metrics import aggregate, hamming, median_probability_graph, tpr
from .oed import (OedConfig, PartitionScheme, SelectionPolicy, criterion_entropy,
                  partition_value, pwc_score, recommend, run_sequential, select_next)
from .fixtures import fixture
from .harness import StudyConfig, derive_seed, load_study, run_study

__version__ = "0.1.0"
