import numpy as np
import pytest

from extheat import DomainSpec, make_radial_grid


@pytest.fixture(scope="session")
def grid_n3_small():
    """Coarse N=3 grid on [1, 30] for cheap solver tests."""
    return make_radial_grid(DomainSpec(dim=3, hole_radius=1.0, outer_radius=30.0, n_cells=900))


@pytest.fixture(scope="session")
def grid_n3_wide():
    """Stretched N=3 grid on [1, 120] for medium-horizon experiments."""
    return make_radial_grid(
        DomainSpec(dim=3, hole_radius=1.0, outer_radius=120.0, n_cells=1500, stretch=1.003)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
