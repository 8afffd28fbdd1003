import numpy as np
import pytest

from rdmsim import Grid1D, PotentialSpec, WaveFunction1D, normalize


@pytest.fixture
def grid():
    return Grid1D(-16.0, 16.0, 512)


@pytest.fixture
def wide_grid():
    return Grid1D(-40.0, 40.0, 1024)


@pytest.fixture
def free_potential():
    return PotentialSpec(softening=1.0)


@pytest.fixture
def harmonic_ground(grid):
    # omega = 1 ground state in natural units: amp ~ exp(-x^2/2)
    return normalize(WaveFunction1D(grid, np.exp(-0.5 * grid.x ** 2)))


@pytest.fixture
def harmonic_potential(grid):
    return PotentialSpec(softening=1.0, external=0.5 * grid.x ** 2)


def random_state(grid, seed, n_modes=6):
    """Smooth normalized pseudo-random state (low wavenumber content)."""
    rng = np.random.default_rng(seed)
    x = grid.x
    amp = np.zeros(grid.n, dtype=complex)
    base = 2.0 * np.pi / grid.length
    for _ in range(n_modes):
        k = base * rng.integers(-8, 9)
        amp += rng.normal() * np.exp(1j * k * x) * np.exp(
            -((x - rng.uniform(-5, 5)) ** 2) / rng.uniform(4.0, 16.0)
        )
    return normalize(WaveFunction1D(grid, amp))
