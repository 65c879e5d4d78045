import numpy as np
import pytest

from ctcsim.chain import builtin_unitary
from ctcsim.qmath import DensityMatrix

RNG_SEED = 20240917


@pytest.fixture
def rng():
    return np.random.default_rng(RNG_SEED)


@pytest.fixture
def ch():
    return builtin_unitary("ch_lower_control")


@pytest.fixture
def mixed1():
    return DensityMatrix.maximally_mixed(1)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import ACCEPTANCE_LINES
    except ImportError:
        return
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
