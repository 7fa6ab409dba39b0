import sys

import numpy as np
import pytest

from gapflow.spectral import GapSet


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def one_gap():
    return GapSet(((-1.0, 1.0),))


@pytest.fixture
def two_gap():
    return GapSet(((-2.0, -1.0), (1.0, 2.0)))


def random_gapset(rng, n):
    """n disjoint gaps with random widths and separations."""
    edges = np.cumsum(rng.uniform(0.2, 1.5, size=2 * n)) - 3.0
    return GapSet(tuple((float(edges[2 * k]), float(edges[2 * k + 1])) for k in range(n)))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
