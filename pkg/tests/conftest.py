import numpy as np
import pytest

from poincare_quad import measures, spectral


@pytest.fixture(scope="session")
def unif01():
    return measures.uniform(0.0, 1.0)


@pytest.fixture(scope="session")
def texp15():
    return measures.truncated_exponential(1.0, 5.0)


@pytest.fixture(scope="session")
def texp03():
    return measures.truncated_exponential(0.0, 3.0)


@pytest.fixture(scope="session")
def bumpy():
    """A smooth non-parametric density used wherever a FEM basis is needed."""
    t = np.linspace(0.0, 1.0, 201)
    return measures.tabulated(t, np.exp(0.6 * np.sin(5 * t) + 0.3 * np.cos(11 * t)))


@pytest.fixture(scope="session")
def fem_unif(unif01):
    return spectral.fem_basis(unif01, 1000, 20)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
