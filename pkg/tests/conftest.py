import numpy as np
import pytest

from rdpg_cpd.cusum import PairSeries
from rdpg_cpd.series import AdjacencySeries

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_series(rng, T, n, p=0.3):
    A = np.triu(rng.random((T, n, n)) < p, 1).astype(np.uint8)
    return AdjacencySeries(A + A.transpose(0, 2, 1))


def shifted_pairs(T, m, t0, low=0.2, high=0.8):
    """Noiseless pair scores: ``low`` for snapshots ``1..t0``, ``high`` afterwards."""
    y = np.full((T, m), low)
    y[t0:] = high
    return PairSeries(y)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
