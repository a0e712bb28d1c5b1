import sys
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rankone import get_space
from rankone import quadrature as qd

settings.register_profile(
    "rankone", deadline=None, max_examples=25, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("rankone")

SPACES = ["CH2", "CH3", "HH2", "OH2"]


@lru_cache(maxsize=None)
def samples(name, N=None, seed=0):
    """Default budgets unless N is given; cached across the session."""
    space = get_space(name)
    N = N or (16384 if space.field == "O" else 4096)
    return qd.generate_samples(space, N, seed)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("tests.test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(module.RESULTS, key=lambda k: (int(k.rstrip("ab")), k)):
        terminalreporter.write_line(module.RESULTS[key])


@pytest.fixture(params=SPACES)
def space(request):
    return get_space(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
