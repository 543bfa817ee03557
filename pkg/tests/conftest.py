import numpy as np
import pytest

from landau_kit.grid import GridSpec


@pytest.fixture(scope="session")
def grid_small():
    """Cheap grid for structural identities (exactness is resolution-independent)."""
    return GridSpec(nx=4, nv=16, vmax=8.0, spatial_dims=1)


@pytest.fixture(scope="session")
def grid_fine():
    """Resolves the Maxwellian well; for quadrature-accuracy oracles."""
    return GridSpec(nx=4, nv=64, vmax=8.0, spatial_dims=1)


@pytest.fixture(scope="session")
def grid_tail():
    """Wide box: the Gaussian box-seam sits at e^{-25}; for null-space tests."""
    return GridSpec(nx=4, nv=32, vmax=10.0, spatial_dims=1)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
