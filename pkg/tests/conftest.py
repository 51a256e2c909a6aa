import numpy as np
import pytest

from scalewave.exponents import ExponentPair, SystemCoefficients
from scalewave.semilinear_sim import FIELDS, DataProfile, RadialGrid, run

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def coeffs_57():
    return SystemCoefficients.from_values(5, 0, 7, 0, 1)


@pytest.fixture(scope="session")
def grid_400():
    return RadialGrid(1, 400.0, 4001)


@pytest.fixture(scope="session")
def trace_supercritical(coeffs_57, grid_400):
    data = [DataProfile("Bump", 1e-2, 4.0, FIELDS)]
    return run(grid_400, coeffs_57, ExponentPair(4, 4), data, 300.0, sample_dt=1.0, snapshot_dt=2.0)


@pytest.fixture(scope="session")
def trace_loss(coeffs_57, grid_400):
    data = [DataProfile("Bump", 1e-2, 4.0, ("v0", "v1"))]
    return run(grid_400, coeffs_57, ExponentPair(2.5, 8), data, 300.0, sample_dt=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
