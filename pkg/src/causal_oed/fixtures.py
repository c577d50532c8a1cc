"""Named benchmark networks shipped with the package."""
from __future__ import annotations

import json
from importlib import resources

from .errors import UnknownFixtureError
from .network import CategoricalNetwork, network_from_json, random_network

FILE_FIXTURES = ("chain8", "tree8", "asia8", "sachs11")
FIXTURE_NAMES = FILE_FIXTURES + ("random10",)
RANDOM10_DEFAULT_SEED = 10

NODE_NAMES = {
    "asia8": ("asia", "tub", "smoke", "lung", "bronc", "either", "xray", "dysp"),
    "sachs11": ("Raf", "Mek", "Plcg", "PIP2", "PIP3", "Erk", "Akt", "PKA", "PKC", "P38", "Jnk"),
}

# Mek, PIP2, Akt, PKA, PKC: the proteins with targeted reagents in the
# flow-cytometry study this network comes from.
SACHS_CANDIDATES = (1, 3, 6, 7, 8)


def fixture_text(name: str) -> str:
    if name not in FILE_FIXTURES:
        raise UnknownFixtureError(name)
    return resources.files(__package__).joinpath("fixtures", f"{name}.json").read_text()


def fixture(name: str, seed: int | None = None) -> CategoricalNetwork:
    """Load a named network. ``seed`` only applies to ``random10``."""
    if name == "random10":
        s = RANDOM10_DEFAULT_SEED if seed is None else seed
        return random_network(10, 2, 0.25, s, name="random10")
    return network_from_json(json.loads(fixture_text(name)))
