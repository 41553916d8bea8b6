import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arraynav import constellation as cst
from arraynav.errors import ArrayNavError, InvalidRecordError, ParseError

BLOCK = """\
ID:                         07
Health:                     000
Eccentricity:               1.0E-02
Time of Applicability(s):  589824.0000
Orbital Inclination(rad):   0.96
Rate of Right Ascen(r/s):  -8.0E-09
SQRT(A)  (m 1/2):           5153.6
Right Ascen at Week(rad):   1.0
Argument of Perigee(rad):   0.5
Mean Anom(rad):             2.0
Af0(s):                     1.0E-05
Af1(s/s):                   0.0
week:                        245
"""


def _toy(e=0.0, i=0.0, **kw):
    base = dict(prn=1, health=0, e=e, toa=0.0, i=i, omega_dot=0.0, sqrt_a=5153.6, omega0=0.3,
                w=0.2, m0=0.1, af0=0.0, af1=0.0, week=245)
    base.update(kw)
    return cst.AlmanacRecord(**base)


def test_empty_input():
    assert cst.parse_yuma("") == []
    assert cst.parse_yuma(b"\n\n") == []


def test_single_block_fields():
    (r,) = cst.parse_yuma(BLOCK)
    assert (r.prn, r.health, r.week) == (7, 0, 245)
    assert r.e == 0.01 and r.sqrt_a == 5153.6 and r.m0 == 2.0 and r.af0 == 1e-5


def test_spacing_around_colon_tolerated():
    text = BLOCK.replace("Eccentricity:               ", "Eccentricity :")
    assert cst.parse_yuma(text)[0].e == 0.01


def test_bundled_fixture(almanac):
    assert len(almanac) == 31
    assert sorted(r.prn for r in almanac) == sorted(set(r.prn for r in almanac))
    r1 = next(r for r in almanac if r.prn == 1)
    # spot check against the file text
    assert r1.e == pytest.approx(1.4197499593e-02)
    assert r1.sqrt_a == pytest.approx(5153.699401)
    assert r1.week == 245 and r1.health == 0


def test_missing_eccentricity_names_block():
    bad = BLOCK + "\n" + "\n".join(ln for ln in BLOCK.splitlines() if not ln.startswith("Ecc"))
    with pytest.raises(ParseError) as exc:
        cst.parse_yuma(bad)
    assert exc.value.line == 15 and "e" in str(exc.value)


def test_malformed_number_line():
    with pytest.raises(ParseError) as exc:
        cst.parse_yuma(BLOCK.replace("0.96", "0.9x6"))
    assert exc.value.line == 5


def test_unhealthy_retained():
    (r,) = cst.parse_yuma(BLOCK.replace("Health:                     000", "Health: 063"))
    assert r.health == 63 and not r.healthy
    assert cst.positions([r], cst.GpsTime(245, 0.0))[0] == []


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=400))
def test_parser_total_over_bytes(data):
    try:
        cst.parse_yuma(data)
    except ArrayNavError:
        pass


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="IDHealthEccentricity:0123456789.-E \n", max_size=300))
def test_parser_total_over_text(text):
    try:
        cst.parse_yuma(text)
    except ArrayNavError:
        pass


def _bisect_kepler(M, e, steps=200):
    lo, hi = M - 1.0, M + 1.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if mid - e * math.sin(mid) - M > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def test_kepler_examples():
    assert cst.kepler_solve(1.234, 0.0) == 1.234
    assert cst.kepler_solve(0.0, 0.7) == 0.0
    E = cst.kepler_solve(1.0, 0.1)
    assert abs(E - 0.1 * math.sin(E) - 1.0) < 1e-12
    assert E == pytest.approx(_bisect_kepler(1.0, 0.1), abs=1e-12)
    with pytest.raises(InvalidRecordError):
        cst.kepler_solve(1.0, 1.0)


@settings(max_examples=500, deadline=None)
@given(st.floats(-20, 20), st.floats(0, 0.99))
def test_kepler_residual(M, e):
    E = cst.kepler_solve(M, e)
    assert abs(E - e * math.sin(E) - M) < 1e-11


def test_toy_orbits():
    circ = _toy()
    for tk in np.linspace(-5e5, 5e5, 37):
        p = cst._position_at(circ, tk)
        assert abs(p[2]) < 1e-6
        assert np.linalg.norm(p) == pytest.approx(circ.semi_major_axis, abs=1e-6)


def test_invalid_record():
    bad = _toy(e=1.2)
    with pytest.raises(InvalidRecordError):
        cst.sat_position(bad, cst.GpsTime(245, 0.0))
    with pytest.raises(InvalidRecordError):
        cst.sat_position(_toy(), cst.GpsTime(260, 0.0))


def _rot(axis, a):
    c, s = math.cos(a), math.sin(a)
    if axis == "z":
        return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])
    return np.array([[1.0, 0, 0], [0, c, -s], [0, s, c]])


def _two_body(rec, tk):
    """Perifocal state rotated into inertial then Earth-fixed axes."""
    n = math.sqrt(cst.GM / rec.semi_major_axis**3)
    M = rec.m0 + n * tk
    E = _bisect_kepler(M, rec.e)
    nu = 2 * math.atan2(math.sqrt(1 + rec.e) * math.sin(E / 2), math.sqrt(1 - rec.e) * math.cos(E / 2))
    r = rec.semi_major_axis * (1 - rec.e**2) / (1 + rec.e * math.cos(nu))
    peri = np.array([r * math.cos(nu), r * math.sin(nu), 0.0])
    inertial = _rot("z", rec.omega0 + rec.omega_dot * tk) @ _rot("x", rec.i) @ _rot("z", rec.w) @ peri
    return _rot("z", -cst.OMEGA_E * (tk + rec.toa)) @ inertial


def test_fixture_against_two_body(almanac):
    for rec in almanac[:8]:
        for dt in (0.0, 3600.0, -7200.0):
            t = cst.GpsTime(rec.week, rec.toa + dt) if rec.toa + dt < 604800 else None
            if t is None:
                continue
            assert np.linalg.norm(cst.sat_position(rec, t) - _two_body(rec, dt)) < 1.0


def test_radius_bounds_and_period(almanac):
    rec = almanac[3]
    a, e = rec.semi_major_axis, rec.e
    T = 2 * math.pi / rec.mean_motion
    for tk in np.linspace(-86400, 86400, 97):
        r = np.linalg.norm(cst._position_at(rec, tk))
        assert a * (1 - e) - 1e-6 <= r <= a * (1 + e) + 1e-6
    # periodic in the rotating-node frame: compare inertial-equivalent radius and z
    p0, p1 = cst._position_at(rec, 0.0), cst._position_at(rec, T)
    assert abs(np.linalg.norm(p0) - np.linalg.norm(p1)) < 10
    assert abs(p0[2] - p1[2]) < 10


def test_week_rollover():
    rec = _toy(week=1023)
    assert cst.time_since_toa(rec, cst.GpsTime(0, 10.0)) == pytest.approx(604810.0)
