"""Street canyon with Rayleigh-distributed building heights.

The street runs along the vehicle heading. Walls are vertical planes at a
lateral offset to the left and right of the vehicle; each wall is cut into
façade segments of fixed length whose heights are Rayleigh draws keyed on
``(seed, side, segment index)`` so that a segment keeps its height for the
whole drive no matter in which order it is queried.

Coordinates are local ENU centred on antenna 1; the ground is at
``z = -antenna_height``. ``heading`` is the yaw angle (counter-clockwise from
East) and ``along`` the distance already driven along the street.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from arraynav.multipath import MultipathPath

LEFT, RIGHT = 0, 1


@dataclass
class CanyonModel:
    half_width_left: float = 15.0
    half_width_right: float = 15.0
    rayleigh_scale: float = 8.0
    segment_length: float = 10.0
    amplitude_range: tuple = (0.2, 0.8)
    antenna_height: float = 1.8
    seed: int = 0
    fixed_heights: tuple | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.half_width_left <= 0 or self.half_width_right <= 0:
            raise ValueError("street half-widths must be positive")
        if self.rayleigh_scale < 0:
            raise ValueError("Rayleigh scale must be non-negative")
        lo, hi = self.amplitude_range
        if not 0 <= lo <= hi:
            raise ValueError("amplitude range must satisfy 0 <= min <= max")

    def height(self, side, along):
        """Building height (m above ground) of the segment containing ``along``."""
        if self.fixed_heights is not None:
            return float(self.fixed_heights[side])
        idx = math.floor(along / self.segment_length)
        key = (side, idx)
        h = self._cache.get(key)
        if h is None:
            if self.rayleigh_scale == 0:
                h = 0.0
            else:
                g = np.random.default_rng([self.seed, side, idx + 2**31])
                h = float(g.rayleigh(self.rayleigh_scale))
            self._cache[key] = h
        return h

    def half_width(self, side):
        return self.half_width_left if side == LEFT else self.half_width_right


PRESETS = {
    "suburban": dict(half_width_left=15.0, half_width_right=15.0, rayleigh_scale=8.0),
    "urban": dict(half_width_left=10.0, half_width_right=10.0, rayleigh_scale=20.0),
    "open": dict(half_width_left=15.0, half_width_right=15.0, rayleigh_scale=0.0),
}


def preset(name, **overrides):
    try:
        params = dict(PRESETS[name])
    except KeyError:
        raise ValueError(f"unknown canyon preset {name!r}") from None
    params.update(overrides)
    return CanyonModel(**params)


def street_axes(heading):
    fwd = np.array([math.cos(heading), math.sin(heading), 0.0])
    left = np.array([-math.sin(heading), math.cos(heading), 0.0])
    return fwd, left


def _wall_hit(canyon, side, origin, direction, fwd, left, along):
    """Height above ground and building height where a ray meets a wall plane.

    Returns None when the ray runs away from (or parallel to) that wall.
    """
    sign = 1.0 if side == LEFT else -1.0
    lateral = sign * float(left @ direction)
    if lateral <= 1e-12:
        return None
    gap = canyon.half_width(side) - sign * float(left @ origin)
    t = gap / lateral
    if t < 0:
        return None
    p = origin + t * direction
    return p, p[2] + canyon.antenna_height, canyon.height(side, along + float(fwd @ p))


def direct_blocked(sat, antenna, canyon, heading, along=0.0):
    fwd, left = street_axes(heading)
    d = np.asarray(sat, dtype=float) - antenna
    d /= np.linalg.norm(d)
    for side in (LEFT, RIGHT):
        hit = _wall_hit(canyon, side, antenna, d, fwd, left, along)
        if hit is not None and hit[1] < hit[2]:
            return True
    return False


def wall_normal(side, heading):
    """Unit normal of a wall pointing into the street."""
    _, left = street_axes(heading)
    return -left if side == LEFT else left


def mirror_reflection(sat, antenna, canyon, side, heading, along=0.0):
    """Specular reflection point on one wall, or None if geometry forbids it."""
    fwd, left = street_axes(heading)
    sat = np.asarray(sat, dtype=float)
    antenna = np.asarray(antenna, dtype=float)
    sign = 1.0 if side == LEFT else -1.0
    plane = sign * canyon.half_width(side)
    # satellite must be on the street side of the wall
    if sign * (float(left @ sat) - plane) >= 0:
        return None
    image = sat - 2.0 * (float(left @ sat) - plane) * left
    ray = image - antenna
    ray /= np.linalg.norm(ray)
    hit = _wall_hit(canyon, side, antenna, ray, fwd, left, along)
    if hit is None:
        return None
    o, z, building = hit
    if not 0.0 <= z <= building:
        return None
    # incoming leg must clear the opposite wall
    inc = sat - o
    inc /= np.linalg.norm(inc)
    other = RIGHT if side == LEFT else LEFT
    cross = _wall_hit(canyon, other, o, inc, fwd, left, along)
    if cross is not None and cross[1] < cross[2]:
        return None
    return o


def reflect_against_canyon(sat, antenna, canyon, heading, rng, along=0.0):
    """Classify the direct path and find specular reflections.

    Returns ``(paths, blocked)``. Each path carries its amplitude, reflection
    point and arrival direction; per-antenna quantities are filled in later.
    """
    antenna = np.asarray(antenna, dtype=float)
    blocked = direct_blocked(sat, antenna, canyon, heading, along)
    paths = []
    lo, hi = canyon.amplitude_range
    for side in (LEFT, RIGHT):
        o = mirror_reflection(sat, antenna, canyon, side, heading, along)
        if o is None:
            continue
        q = o - antenna
        q /= np.linalg.norm(q)
        paths.append(MultipathPath(amplitude=float(rng.uniform(lo, hi)), point=o, direction=q))
    return paths, blocked


def incidence_angles(sat, receiver, o, normal):
    """Angles (rad) of the incoming and outgoing legs against the wall normal."""
    n = np.asarray(normal, dtype=float)
    a = np.asarray(sat, dtype=float) - o
    b = np.asarray(receiver, dtype=float) - o
    ia = math.atan2(np.linalg.norm(np.cross(a, n)), float(a @ n))
    ib = math.atan2(np.linalg.norm(np.cross(b, n)), float(b @ n))
    return ia, ib
