import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from causal_oed.network import InterventionalDataset  # noqa: E402


def random_dataset(rng: np.random.Generator, n_nodes: int, arities, n_rows: int,
                   p_manip: float = 0.3) -> InterventionalDataset:
    states = np.column_stack([rng.integers(0, a, size=n_rows) for a in arities]) \
        if n_rows else np.zeros((0, n_nodes), dtype=np.int64)
    manip = np.zeros((n_rows, n_nodes), dtype=bool)
    for r in range(n_rows):
        if rng.random() < p_manip:
            manip[r, rng.integers(n_nodes)] = True
    return InterventionalDataset(tuple(arities), states, manip)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][3:])):
            terminalreporter.write_line(line)
