import itertools

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=120, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def dyck_paths(n):
    """All Dyck paths of length 2n as +1/-1 tuples (brute force)."""
    for steps in itertools.product((1, -1), repeat=2 * n):
        h = 0
        for s in steps:
            h += s
            if h < 0:
                break
        else:
            if h == 0:
                yield steps


def height_sums(steps, M):
    hs, h = [0], 0
    for s in steps:
        h += s
        hs.append(h)
    return tuple(sum(x**k for x in hs) for k in range(1, M + 1))


@pytest.fixture
def brute_dyck():
    return dyck_paths


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
