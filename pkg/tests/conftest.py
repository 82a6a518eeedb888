import pytest

from twoscale_ldp import invariant_density, register_family

from oracles import ACCEPTANCE_LINES


@pytest.fixture(scope="session")
def ou():
    """OU testbed: b = -z, sigma = sqrt 2, A = z - x, B = 1."""
    return register_family("ou_linear")


@pytest.fixture(scope="session")
def ou_p(ou):
    return invariant_density(ou, (-8.0, 8.0), 1e-3)


@pytest.fixture(scope="session")
def ou_z():
    """OU with A = z and B = 0 (variational testbed)."""
    return register_family("ou_linear", {"a2": 0.0, "b1": 0.0})


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.lstrip().startswith("info")):
            terminalreporter.write_line(line)
