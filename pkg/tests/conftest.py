import numpy as np
import pytest
from hypothesis import settings

from flockopt.config import SimConfig

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# Filled by tests/test_acceptance.py, printed after the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def short_config():
    return SimConfig(duration=10.0)


@pytest.fixture
def quiet_config():
    """No noise, no delay: sensed states equal true states."""
    return SimConfig(sigma_inner=0.0, t_del=0.0, duration=10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
