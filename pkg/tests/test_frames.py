import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arraynav import frames
from arraynav.errors import DegenerateGeometryError

from conftest import KARLSRUHE


def test_datum_points():
    assert np.allclose(frames.geodetic_to_ecef(0, 0, 0), [6378137.0, 0, 0], atol=0)
    pole = frames.geodetic_to_ecef(math.pi / 2, 0, 0)
    assert abs(pole[2] - frames.WGS84_B) < 1e-3
    assert abs(pole[0]) < 1e-6


@settings(max_examples=1000, deadline=None)
@given(
    st.floats(-math.pi / 2, math.pi / 2),
    st.floats(-math.pi + 1e-9, math.pi),
    st.floats(-100.0, 1e6),
)
def test_geodetic_roundtrip(lat, lon, h):
    p = frames.geodetic_to_ecef(lat, lon, h)
    q = frames.geodetic_to_ecef(*frames.ecef_to_geodetic(p))
    assert np.linalg.norm(p - q) < 1e-6


def test_enu_examples():
    o = frames.geodetic_to_ecef(*KARLSRUHE)
    assert np.allclose(frames.ecef_to_enu(o, KARLSRUHE), 0, atol=1e-9)
    up = frames.geodetic_to_ecef(KARLSRUHE[0], KARLSRUHE[1], KARLSRUHE[2] + 100)
    assert np.allclose(frames.ecef_to_enu(up, KARLSRUHE), [0, 0, 100], atol=1e-3)


@settings(max_examples=200, deadline=None)
@given(st.tuples(*[st.floats(-1e7, 1e7)] * 3))
def test_enu_preserves_norm(d):
    o = frames.geodetic_to_ecef(*KARLSRUHE)
    p = o + np.array(d)
    enu = frames.ecef_to_enu(p, KARLSRUHE)
    assert abs(np.linalg.norm(enu) - np.linalg.norm(d)) <= 1e-9 * max(1.0, np.linalg.norm(d))
    assert np.allclose(frames.enu_to_ecef(enu, KARLSRUHE), p, atol=1e-6)


def test_enu_rotation_orthonormal():
    C = frames.enu_rotation(0.7, -2.1)
    assert np.allclose(C @ C.T, np.eye(3), atol=1e-15)
    assert np.linalg.det(C) == pytest.approx(1.0)


def test_los_overhead_and_north():
    o = frames.geodetic_to_ecef(*KARLSRUHE)
    C = frames.enu_rotation(*KARLSRUHE[:2])
    zenith = o + C.T @ np.array([0, 0, 2e7])
    north = o + C.T @ np.array([0, 2e7, 0])
    H, el, az = frames.los_and_angles([zenith, north], KARLSRUHE)
    assert np.allclose(H[0], [0, 0, 1], atol=1e-12)
    assert el[0] == pytest.approx(math.pi / 2)
    assert az[1] == pytest.approx(0.0, abs=1e-12) and abs(el[1]) < 1e-12
    east = o + C.T @ np.array([1e6, 0, 0])
    _, _, az = frames.los_and_angles([east], KARLSRUHE)
    assert az[0] == pytest.approx(math.pi / 2)


def test_los_degenerate():
    o = frames.geodetic_to_ecef(*KARLSRUHE)
    with pytest.raises(DegenerateGeometryError):
        frames.los_and_angles([o], KARLSRUHE)


def test_los_unit_rows_and_monotone_cutoff(almanac):
    from arraynav import constellation as cst

    _, ecef = cst.positions(almanac, cst.GpsTime(245, 496800.0))
    H, el, _ = frames.los_and_angles(ecef, KARLSRUHE)
    assert np.allclose(np.linalg.norm(H, axis=1), 1.0, atol=1e-9)
    counts = [len(frames.visible(el, math.radians(c))) for c in range(-90, 91, 5)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
