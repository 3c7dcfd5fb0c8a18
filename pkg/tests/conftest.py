import warnings
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from aspot import PotInstance
from aspot.exceptions import MaxIterationsExceeded

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixture_path():
    return FIXTURES / "instance_n5.json"


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxIterationsExceeded)
        yield


def make_instance(rng, n, s_frac=None, cost_max=1.0):
    r = rng.random(n) + 0.05
    c = rng.random(n) + 0.05
    r *= rng.uniform(0.5, 1.5) / r.sum()
    c *= rng.uniform(0.5, 1.5) / c.sum()
    C = rng.random((n, n))
    C *= cost_max / C.max()
    frac = rng.uniform(0.2, 0.9) if s_frac is None else s_frac
    return PotInstance(r, c, C, frac * min(r.sum(), c.sum()))


@st.composite
def instances(draw, min_n=2, max_n=6):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(min_n, max_n))
    return make_instance(np.random.default_rng(seed), n)


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
