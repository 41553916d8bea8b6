"""WGS-84 geodetic/ECEF/ENU conversions and line-of-sight geometry."""

import math

import numpy as np

from arraynav.errors import DegenerateGeometryError

WGS84_A = 6378137.0
WGS84_F = 1 / 298.257223563
WGS84_B = WGS84_A * (1 - WGS84_F)
WGS84_E2 = WGS84_F * (2 - WGS84_F)


def geodetic_to_ecef(lat, lon, height):
    sl, cl = math.sin(lat), math.cos(lat)
    n = WGS84_A / math.sqrt(1 - WGS84_E2 * sl * sl)
    return np.array(
        [
            (n + height) * cl * math.cos(lon),
            (n + height) * cl * math.sin(lon),
            (n * (1 - WGS84_E2) + height) * sl,
        ]
    )


def ecef_to_geodetic(p, max_iter=10, tol=1e-12):
    """Fixed-point latitude iteration; returns ``(lat, lon, height)``."""
    x, y, z = (float(c) for c in p)
    lon = math.atan2(y, x)
    r = math.hypot(x, y)
    lat = math.atan2(z, r * (1 - WGS84_E2))
    for _ in range(max_iter):
        sl = math.sin(lat)
        n = WGS84_A / math.sqrt(1 - WGS84_E2 * sl * sl)
        new = math.atan2(z + WGS84_E2 * n * sl, r)
        done = abs(new - lat) < tol
        lat = new
        if done:
            break
    sl, cl = math.sin(lat), math.cos(lat)
    h = r * cl + z * sl - WGS84_A * math.sqrt(1 - WGS84_E2 * sl * sl)
    return lat, lon, h


def enu_rotation(lat, lon):
    """Rows are the East, North and Up unit vectors expressed in ECEF."""
    sl, cl = math.sin(lat), math.cos(lat)
    so, co = math.sin(lon), math.cos(lon)
    return np.array(
        [
            [-so, co, 0.0],
            [-sl * co, -sl * so, cl],
            [cl * co, cl * so, sl],
        ]
    )


def ecef_to_enu(p, origin):
    lat, lon, h = origin
    o = geodetic_to_ecef(lat, lon, h)
    return enu_rotation(lat, lon) @ (np.asarray(p, dtype=float) - o)


def enu_to_ecef(e, origin):
    lat, lon, h = origin
    return geodetic_to_ecef(lat, lon, h) + enu_rotation(lat, lon).T @ np.asarray(e, dtype=float)


def los_and_angles(sat_positions, receiver):
    """Unit ENU vectors receiver->satellite plus elevation and azimuth.

    Azimuth is clockwise from North in ``[0, 2 pi)``.
    """
    lat, lon, h = receiver
    rx = geodetic_to_ecef(lat, lon, h)
    C = enu_rotation(lat, lon)
    sats = np.atleast_2d(np.asarray(sat_positions, dtype=float))
    d = (sats - rx) @ C.T
    rng = np.linalg.norm(d, axis=1)
    if np.any(rng < 1e-3):
        raise DegenerateGeometryError("satellite coincides with receiver")
    H = d / rng[:, None]
    el = np.arcsin(np.clip(H[:, 2], -1.0, 1.0))
    az = np.mod(np.arctan2(H[:, 0], H[:, 1]), 2 * np.pi)
    return H, el, az


def visible(elevations, cutoff):
    return np.flatnonzero(np.asarray(elevations) >= cutoff)
