import mpmath
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def mp_f12(z, dps=50):
    with mpmath.workdps(dps):
        z = mpmath.mpf(z)
        return -mpmath.mpf(3) / 2 * (mpmath.cos(z) / z - (mpmath.sin(z) / z**2 + mpmath.cos(z) / z**3))


def mp_gamma12(z, dps=50):
    with mpmath.workdps(dps):
        z = mpmath.mpf(z)
        return mpmath.mpf(3) / 2 * (mpmath.sin(z) / z - (mpmath.sin(z) / z**3 - mpmath.cos(z) / z**2))


@pytest.fixture
def f12_ref():
    return mp_f12


@pytest.fixture
def gamma12_ref():
    return mp_gamma12


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
