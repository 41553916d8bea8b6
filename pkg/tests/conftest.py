"""Shared forward models and fixtures."""

import math

import numpy as np
import pytest

from arraynav import constellation as cst
from arraynav import so3
from arraynav.geometry import ArrayGeometry

KARLSRUHE = (math.radians(49.011), math.radians(8.423), 112.0)


def random_los(rng, n, min_el=15.0):
    """Unit ENU vectors spread over the sky above ``min_el`` degrees."""
    el = np.radians(rng.uniform(min_el, 88.0, n))
    az = rng.uniform(0, 2 * np.pi, n)
    return np.column_stack([np.cos(el) * np.sin(az), np.cos(el) * np.cos(az), np.sin(el)])


def well_spread_los(rng, n):
    """LOS set with a condition number that keeps the attitude fit well posed."""
    while True:
        H = random_los(rng, n)
        if np.linalg.cond(H) < 20:
            return H


def plane_wave_phases(H, R, geometry, rng=None, sigma=0.0, ambiguity=True):
    """Carrier phases (cycles) from the far-field model, antenna 1 as reference.

    Antenna ``r`` is closer to the satellite by ``los . d_r``, so its phase is
    lower by that amount over the wavelength.
    """
    d = geometry.world_offsets(R)
    ph = -(H @ d.T) / geometry.wavelength
    rng = rng if rng is not None else np.random.default_rng(0)
    if ambiguity:
        ph = ph + rng.integers(-500, 500, ph.shape)
    if sigma:
        ph = ph + rng.normal(0, sigma, ph.shape) / geometry.wavelength
    return ph


@pytest.fixture
def geometry():
    return ArrayGeometry()


@pytest.fixture(scope="session")
def almanac():
    return cst.load_bundled()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rand_rot(rng):
    return so3.random_rotation(rng)
