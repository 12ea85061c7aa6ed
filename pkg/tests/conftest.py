import pytest

from rieszlab.circle_riesz import lacunary_sequence
from rieszlab.rw_unitary import build_rw_sequence


@pytest.fixture(scope="session")
def rw16():
    return build_rw_sequence(2, range(1, 17), trials=64, seed=7)


@pytest.fixture(scope="session")
def rw_lacunary():
    """Certified members at 1, 3, ..., 243 (n = 2)."""
    return build_rw_sequence(2, lacunary_sequence(6), trials=64, seed=11)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
