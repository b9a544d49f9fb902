import numpy as np
import pytest

from torus_nls.field import PhysicalField, SpectralField, h1_norm
from torus_nls.geometry import TorusGeometry


@pytest.fixture
def geom8():
    return TorusGeometry(lam=(1.0, 1.0, 1.0, 1.0), grid=(8, 8, 8, 8))


@pytest.fixture
def geom16():
    return TorusGeometry(lam=(1.0, 1.0, 1.0, 1.0), grid=(16, 16, 16, 16))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_physical(geometry, rng, scale=1.0):
    data = rng.standard_normal(geometry.shape) + 1j * rng.standard_normal(geometry.shape)
    return PhysicalField(geometry, scale * data)


def random_smooth_spectral(geometry, rng, envelope=2.0, h1_target=1.0):
    raw = rng.standard_normal(geometry.shape) + 1j * rng.standard_normal(geometry.shape)
    weight = np.exp(-0.5 * geometry.mode_norm_sq_grid() / envelope**2)
    spec = SpectralField(geometry, raw * weight)
    return SpectralField(geometry, spec.coefficients * (h1_target / h1_norm(spec)))


def plane_wave(geometry, n, amplitude=1.0):
    """Physical-space plane wave amplitude * e^{i omega(n) . x}."""
    phase = np.zeros(geometry.shape)
    for ax, (w, m) in enumerate(zip(geometry.omega_grids(), n)):
        x = geometry.axis_coordinates(ax)
        shape = [1, 1, 1, 1]
        shape[ax] = geometry.grid[ax]
        phase = phase + (2 * np.pi * m / geometry.lam[ax]) * x.reshape(shape)
    return PhysicalField(geometry, amplitude * np.exp(1j * phase))
