import numpy as np
import pytest

from dnlslab.grid import ComplexField, GridSpec


@pytest.fixture
def small_grid():
    return GridSpec(half_width=32.0, n_points=1024)


@pytest.fixture
def wide_grid():
    return GridSpec(half_width=64.0, n_points=2048)


@pytest.fixture
def gaussian_field(small_grid):
    return ComplexField(small_grid, 0.0, np.exp(-small_grid.x**2 / 2.0))


def random_field(grid, seed=0, scale=1.0, band=0.25):
    """Smooth random band-limited field (deterministic per seed)."""
    rng = np.random.default_rng(seed)
    spec = rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)
    spec *= np.exp(-((grid.xi / (band * grid.xi_max)) ** 4))
    window = np.exp(-((grid.x / (0.5 * grid.half_width)) ** 8))
    vals = np.fft.ifft(spec) * window
    vals *= scale / np.max(np.abs(vals))
    return ComplexField(grid, 0.0, vals)
