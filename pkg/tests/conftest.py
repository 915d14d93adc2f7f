from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from dualapprox import builtin_curve, extend

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def parabola():
    return extend(builtin_curve("parabola", (0.0, 1.0)))


@pytest.fixture(scope="session")
def exponential():
    return extend(builtin_curve("exponential", (0.0, 1.0)))


@pytest.fixture(scope="session")
def circle():
    return extend(builtin_curve("circle_arc", (-0.5, 0.5)))


_ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def report():
    """Record one line per acceptance criterion; printed in the terminal summary."""
    def record(n, title, passed, detail=""):
        _ACCEPTANCE[n] = f"criterion {n:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        print(_ACCEPTANCE[n])
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[n])
