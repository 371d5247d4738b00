import numpy as np
import pytest

from nslab.leray import LerayProjector
from nslab.spectral import GridSpec, SpectralVectorField, random_spectral_noise


@pytest.fixture(scope="session")
def grid16():
    return GridSpec(16)


@pytest.fixture(scope="session")
def grid32():
    return GridSpec(32)


@pytest.fixture
def mesh16(grid16):
    return grid16.meshgrid()


def random_divfree(grid, seed):
    return LerayProjector(grid).project(random_spectral_noise(grid, seed, vector=True))


def taylor_green_sincos(grid, amplitude=1.0):
    """The (sin x1 cos x2, -cos x1 sin x2, 0) cell, divergence free."""
    X, Y, _ = grid.meshgrid()
    return SpectralVectorField.from_physical(
        grid,
        np.stack(
            [
                amplitude * np.sin(X) * np.cos(Y),
                -amplitude * np.cos(X) * np.sin(Y),
                np.zeros(grid.shape),
            ]
        ),
    )
