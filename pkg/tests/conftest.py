import numpy as np
import pytest

from chmarcus.grid import PeriodicGrid
from chmarcus.noise import IntensityMeasure, sigma_field
from chmarcus.soliton import SolitonParams, build_profile


@pytest.fixture(scope="session")
def grid():
    return PeriodicGrid(80.0, 2048)


@pytest.fixture(scope="session")
def grid512():
    return PeriodicGrid(80.0, 512)


@pytest.fixture(scope="session")
def profile(grid):
    return build_profile(SolitonParams(3.0, 1.0), grid)


@pytest.fixture(scope="session")
def profile512(grid512):
    return build_profile(SolitonParams(3.0, 1.0), grid512)


@pytest.fixture(scope="session")
def sigma_var(grid512):
    return sigma_field(grid512, "sine:1,0.3")


@pytest.fixture(scope="session")
def measure():
    return IntensityMeasure.symmetric(0.5, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def bump(grid, center=0.0, width=2.0):
    return np.exp(-((grid.x - center) / width) ** 2)


def smooth_random(grid, rng, width=1.0, amp=1.0):
    """Random real field with a Gaussian-damped spectrum, localized near the origin."""
    n = grid.n_points // 2 + 1
    xi = grid.wavenumbers
    coef = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.exp(-(xi * width) ** 2)
    coef[0] = coef[0].real
    coef[-1] = 0.0
    f = np.fft.irfft(coef, n=grid.n_points)
    f = f * np.exp(-(grid.x / 8.0) ** 2)
    return amp * f / np.max(np.abs(f))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
