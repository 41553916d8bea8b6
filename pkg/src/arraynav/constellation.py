"""GPS YUMA almanac parsing and Keplerian propagation to ECEF."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from arraynav.errors import ConvergenceError, InvalidRecordError, ParseError

GM = 3.986005e14
OMEGA_E = 7.2921151467e-5
SECONDS_PER_WEEK = 604800.0
WEEK_ROLLOVER = 1024


@dataclass(frozen=True)
class GpsTime:
    week: int
    tow: float

    def __post_init__(self):
        if not 0.0 <= self.tow < SECONDS_PER_WEEK:
            raise ValueError(f"time of week out of range: {self.tow}")


@dataclass(frozen=True)
class AlmanacRecord:
    prn: int
    health: int
    e: float
    toa: float
    i: float
    omega_dot: float
    sqrt_a: float
    omega0: float
    w: float
    m0: float
    af0: float
    af1: float
    week: int

    @property
    def healthy(self):
        return self.health == 0

    @property
    def semi_major_axis(self):
        return self.sqrt_a**2

    @property
    def mean_motion(self):
        return math.sqrt(GM / self.semi_major_axis**3)


# key prefix (lower-case, spaces collapsed) -> (field, converter)
_KEYS = [
    ("id", "prn", int),
    ("health", "health", int),
    ("eccentricity", "e", float),
    ("time of applicability", "toa", float),
    ("orbital inclination", "i", float),
    ("rate of right ascen", "omega_dot", float),
    ("sqrt(a)", "sqrt_a", float),
    ("right ascen at week", "omega0", float),
    ("argument of perigee", "w", float),
    ("mean anom", "m0", float),
    ("af0", "af0", float),
    ("af1", "af1", float),
    ("week", "week", int),
]
_FIELDS = [f for _, f, _ in _KEYS]


def _match_key(key):
    k = " ".join(key.lower().split())
    for prefix, field, conv in _KEYS:
        if k.startswith(prefix):
            return field, conv
    return None, None


def _convert(conv, text, lineno):
    try:
        value = conv(text) if conv is float else int(text, 10)
    except ValueError:
        try:
            f = float(text)
        except ValueError:
            raise ParseError(f"malformed numeric value {text!r}", lineno) from None
        if conv is int and f.is_integer():
            return int(f)
        raise ParseError(f"malformed integer value {text!r}", lineno) from None
    if conv is float and not math.isfinite(value):
        raise ParseError(f"non-finite value {text!r}", lineno)
    return value


def parse_yuma(source) -> list[AlmanacRecord]:
    """Parse YUMA text (a string, bytes or a text stream).

    Blocks are delimited by blank lines or ``****`` header lines. Unhealthy
    satellites are kept; check ``record.healthy``.
    """
    if isinstance(source, (bytes, bytearray)):
        try:
            source = source.decode("ascii")
        except UnicodeDecodeError as exc:
            raise ParseError(f"non-ASCII input at byte {exc.start}") from None
    if isinstance(source, str):
        source = io.StringIO(source)

    records = []
    block: dict = {}
    start = None

    def close():
        nonlocal block, start
        if block:
            missing = [f for f in _FIELDS if f not in block]
            if missing:
                raise ParseError(
                    f"almanac block starting here is missing {', '.join(missing)}", start
                )
            records.append(_make_record(block, start))
        block = {}
        start = None

    for lineno, raw in enumerate(source, 1):
        line = raw.strip()
        if not line or line.startswith("*"):
            close()
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ParseError(f"expected 'KEY: value', got {line[:40]!r}", lineno)
        field, conv = _match_key(key)
        if field is None:
            raise ParseError(f"unknown almanac key {key.strip()!r}", lineno)
        if field in block:
            # a repeated key means the previous block ended without a separator
            close()
        if start is None:
            start = lineno
        block[field] = _convert(conv, value.strip(), lineno)
    close()
    return records


def _make_record(block, lineno):
    rec = AlmanacRecord(**block)
    if not 0.0 <= rec.e < 1.0:
        raise ParseError(f"eccentricity {rec.e} outside [0, 1)", lineno)
    if rec.sqrt_a <= 0.0:
        raise ParseError(f"non-positive SQRT(A) {rec.sqrt_a}", lineno)
    return rec


def load_yuma(path):
    with open(path, encoding="ascii", errors="strict") as fh:
        try:
            return parse_yuma(fh)
        except UnicodeDecodeError as exc:
            raise ParseError(f"non-ASCII input at byte {exc.start}") from None


def bundled_almanac_path():
    return resources.files("arraynav") / "data" / "almanac.yuma"


def load_bundled():
    return parse_yuma(bundled_almanac_path().read_text(encoding="ascii"))


def kepler_solve(M, e, tol=1e-12, max_iter=50):
    """Eccentric anomaly from mean anomaly; Newton with a bisection guard."""
    if not 0.0 <= e < 1.0:
        raise InvalidRecordError(f"eccentricity {e} outside [0, 1)")
    turns = math.floor((M + math.pi) / (2 * math.pi))
    m = M - 2 * math.pi * turns
    if e == 0.0 or m == 0.0:
        return M
    lo, hi = m - e, m + e
    E = m if e < 0.8 else min(max(math.copysign(math.pi, m), lo), hi)
    for _ in range(max_iter):
        f = E - e * math.sin(E) - m
        if abs(f) < tol:
            return E + 2 * math.pi * turns
        if f > 0:
            hi = E
        else:
            lo = E
        step = E - f / (1 - e * math.cos(E))
        E = step if lo < step < hi else 0.5 * (lo + hi)
    raise ConvergenceError("Kepler iteration did not converge", last=E)


def time_since_toa(rec, t: GpsTime):
    dw = (t.week - rec.week) % WEEK_ROLLOVER
    if dw > WEEK_ROLLOVER // 2:
        dw -= WEEK_ROLLOVER
    return dw * SECONDS_PER_WEEK + t.tow - rec.toa


def sat_position(rec: AlmanacRecord, t: GpsTime, max_age=7 * 86400.0):
    """ECEF position (m) of an almanac satellite at GPS time ``t``."""
    if not 0.0 <= rec.e < 1.0:
        raise InvalidRecordError(f"PRN {rec.prn}: eccentricity {rec.e} outside [0, 1)")
    if rec.sqrt_a <= 0.0:
        raise InvalidRecordError(f"PRN {rec.prn}: non-positive SQRT(A)")
    tk = time_since_toa(rec, t)
    if abs(tk) >= max_age:
        raise InvalidRecordError(f"PRN {rec.prn}: almanac is {tk / 86400:.1f} days from epoch")
    return _position_at(rec, tk)


def _position_at(rec, tk):
    a = rec.semi_major_axis
    E = kepler_solve(rec.m0 + rec.mean_motion * tk, rec.e)
    nu = math.atan2(math.sqrt(1 - rec.e**2) * math.sin(E), math.cos(E) - rec.e)
    u = nu + rec.w
    r = a * (1 - rec.e * math.cos(E))
    xp, yp = r * math.cos(u), r * math.sin(u)
    node = rec.omega0 + (rec.omega_dot - OMEGA_E) * tk - OMEGA_E * rec.toa
    ci, si = math.cos(rec.i), math.sin(rec.i)
    cn, sn = math.cos(node), math.sin(node)
    return np.array([xp * cn - yp * ci * sn, xp * sn + yp * ci * cn, yp * si])


def positions(records, t: GpsTime, healthy_only=True):
    """``(prns, (n, 3) ECEF array)`` for every usable record."""
    recs = [r for r in records if r.healthy or not healthy_only]
    if not recs:
        return [], np.zeros((0, 3))
    return [r.prn for r in recs], np.array([sat_position(r, t) for r in recs])
