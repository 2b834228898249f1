import pytest

from entspec import GOLDEN, asymptotic_spec, density

PHIS = (0.5, 1.0, GOLDEN, 3.0)


@pytest.fixture(scope="session")
def golden_spec():
    return asymptotic_spec("blockaded", phi=GOLDEN)


@pytest.fixture(scope="session")
def densities():
    """Closed-form densities for the four reference phi values, built once."""
    return {phi: density(asymptotic_spec("blockaded", phi=phi)) for phi in PHIS}


@pytest.fixture(scope="session")
def mp_spec():
    return asymptotic_spec("unconstrained")


@pytest.fixture(scope="session")
def mp_dens(mp_spec):
    return density(mp_spec)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
