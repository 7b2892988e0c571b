import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ptrlearn.graph import NeighborGraph  # noqa: E402


def random_graph(rng, n, p):
    upper = np.triu(rng.random((n, n)) < p, 1)
    return NeighborGraph.from_mask(upper | upper.T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
