"""Shared fixtures: members of W are cached per session because solving one takes a fraction of a second."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from minitwistor.geodesic_trace import member_of
from minitwistor.surface_config import random_config

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def member2():
    cfg = random_config(2, 1, 0)
    return cfg, member_of(cfg)


@pytest.fixture(scope="session")
def member3():
    cfg = random_config(3, 1, 0)
    return cfg, member_of(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    """One ``PASS/FAIL criterion N: ...`` line per acceptance criterion, echoed in the summary."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
