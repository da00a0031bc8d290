import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

CRITERIA_LINES = []


@pytest.fixture
def criterion_line():
    """Record a one-line PASS/FAIL verdict; all lines are echoed in the summary."""

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        CRITERIA_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def separated_blobs():
    """Three well separated classes of 30 samples in physical ranges."""
    rng = np.random.default_rng(3)
    means = np.array([[500.0, 10.0, 0.2, 0.3], [1500.0, 40.0, 0.5, 0.6], [2500.0, 70.0, 0.8, 0.9]])
    sd = np.array([10.0, 0.5, 0.01, 0.01])
    X = np.vstack([rng.normal(m, sd, size=(30, 4)) for m in means])
    y = np.repeat([1, 2, 3], 30)
    return X, y, means, sd
