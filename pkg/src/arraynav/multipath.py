"""Multipath observable error models for a single satellite.

All functions take per-path amplitudes relative to the direct signal. Phase
delays are in radians, path lengths in metres.
"""

import enum
from dataclasses import dataclass

import numpy as np

from arraynav.errors import DegenerateGeometryError, DestructiveInterferenceError

# below this composite amplitude the error models are singular
MIN_COMPOSITE_AMPLITUDE = 0.05


class ReceptionScenario(enum.Enum):
    LOS = "LOS"
    NLOS = "NLOS"
    MULTIPATH = "Multipath"
    BLOCKED = "Blocked"

    @property
    def contaminated(self):
        return self in (ReceptionScenario.NLOS, ReceptionScenario.MULTIPATH)


@dataclass
class MultipathPath:
    """One reflected ray.

    ``point`` and ``direction`` are in the local ENU frame of antenna 1;
    ``direction`` is the unit arrival direction (antenna towards reflector).
    ``excess`` and ``phase_delay`` hold one entry per antenna once the path
    has been propagated to the array.
    """

    amplitude: float
    point: np.ndarray
    direction: np.ndarray
    excess: np.ndarray | None = None
    phase_delay: np.ndarray | None = None


def excess_path_length(x_s, x_r, o):
    x_s, x_r, o = (np.asarray(v, dtype=float) for v in (x_s, x_r, o))
    a = np.linalg.norm(x_s - o)
    b = np.linalg.norm(o - x_r)
    c = np.linalg.norm(x_s - x_r)
    if min(a, b, c) < 1e-9:
        raise DegenerateGeometryError("coincident points in excess path length")
    return max(a + b - c, 0.0)


def propagate_to_antennas(delta1, q, geometry, R):
    """Excess path at all five antennas from antenna 1's value.

    Plane-wave relation ``delta_r = delta_1 - d_1r . q``. It ignores the
    direct path's own change across the array, so it is exact only when the
    LOS is perpendicular to the baselines and the reflector is far away.
    """
    d = geometry.world_offsets(R)
    return float(delta1) - d @ np.asarray(q, dtype=float)


def wrap_phase(x):
    x = np.asarray(x, dtype=float)
    w = x - 2 * np.pi * np.ceil((x - np.pi) / (2 * np.pi))
    return w if w.ndim else float(w)


def phase_delay(delta, wavelength):
    return wrap_phase(2 * np.pi * np.asarray(delta, dtype=float) / wavelength)


def _sums(amplitudes, delays):
    a = np.asarray(amplitudes, dtype=float)
    p = np.asarray(delays, dtype=float)
    # per-path amplitudes broadcast over per-antenna delays
    a = a.reshape(a.shape + (1,) * (p.ndim - a.ndim))
    s = np.sum(a * np.sin(p), axis=0)
    c = 1.0 + np.sum(a * np.cos(p), axis=0)
    if np.any(np.hypot(s, c) < MIN_COMPOSITE_AMPLITUDE):
        raise DestructiveInterferenceError("composite amplitude below guard")
    return a, p, s, c


def carrier_phase_error(paths):
    """Phase error (rad) from ``[(a, dphi), ...]``; arrays broadcast per antenna."""
    if len(paths) == 0:
        return 0.0
    a, p = zip(*paths)
    _, _, s, c = _sums(a, p)
    return np.arctan2(s, c) if np.ndim(s) else float(np.arctan2(s, c))


def pseudorange_error(paths):
    """Pseudorange error (m) from ``[(a, delta, dphi), ...]``."""
    if len(paths) == 0:
        return 0.0
    a, d, p = zip(*paths)
    a, p, _, c = _sums(a, p)
    num = np.sum(a * np.asarray(d, dtype=float) * np.sin(p), axis=0)
    out = num / c
    return out if np.ndim(out) else float(out)


def composite_amplitude(paths):
    if len(paths) == 0:
        return 1.0
    a, p = zip(*paths)
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    a = a.reshape(a.shape + (1,) * (p.ndim - a.ndim))
    return np.abs(1.0 + np.sum(a * np.exp(1j * p), axis=0))
