import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from covlab.rng import stream

settings.register_profile("default", max_examples=60, deadline=None)
settings.register_profile(
    "thorough", max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return stream(20261015, 0)


def random_psd(rng, d):
    g = rng.standard_normal((d, d))
    return g @ g.T


def random_sym(rng, d):
    g = rng.standard_normal((d, d))
    return 0.5 * (g + g.T)


@pytest.fixture
def psd_factory(rng):
    return lambda d: random_psd(rng, d)


def assert_within_se(estimate, target, k=3.0):
    gap = abs(estimate.value - target)
    assert gap <= k * estimate.std_error, (
        f"estimate {estimate.value:.6g} is {gap / estimate.std_error:.2f} SE from {target:.6g}"
    )


np.set_printoptions(precision=6)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number, name: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
