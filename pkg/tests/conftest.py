import random

import pytest
from hypothesis import HealthCheck, settings

from helpers import World

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng(request):
    # one stream per test, stable across runs
    return random.Random(request.node.nodeid)


@pytest.fixture
def world(rng):
    return World(rng)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
