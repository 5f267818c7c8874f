import pytest

from coldplasma.coefficients import parabolic, zero_sigma
from coldplasma.geometry import build_cc_example_domain, build_half_disk

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cc_domain():
    return build_cc_example_domain(M=10.0, eps=0.1, delta0=0.05, delta1=0.05)


@pytest.fixture(scope="session")
def half_disk():
    return build_half_disk(1.0, parabolic())


@pytest.fixture(scope="session")
def tc_cc():
    return zero_sigma()


@pytest.fixture(scope="session")
def tc_par():
    return parabolic()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
