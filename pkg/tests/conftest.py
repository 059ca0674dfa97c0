from fractions import Fraction as F

import numpy as np
import pytest

from refundmech.model import DiscreteInstance, GridSpec, gen_random


@pytest.fixture
def inst_a():
    return DiscreteInstance((1, 2), ((F(1, 2), F(1, 2)), (F(1, 4), F(3, 4))))


@pytest.fixture
def inst_b():
    return DiscreteInstance((1, 10), ((F(9, 10), F(1, 10)), (F(1, 10), F(9, 10))))


def small_random(seed, max_m=6, max_n=6, spec=GridSpec()):
    """Random instance whose sizes are themselves drawn from the seed."""
    rng = np.random.default_rng([seed, 99])
    m = int(rng.integers(1, max_m + 1))
    n = int(rng.integers(1, max_n + 1))
    return gen_random(seed, m, n, spec)


# filled by the acceptance suite, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
