import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arraynav import canyon as cy
from arraynav.multipath import excess_path_length


def _sky(el_deg, az_deg, r=2e7):
    el, az = math.radians(el_deg), math.radians(az_deg)
    return r * np.array([math.cos(el) * math.sin(az), math.cos(el) * math.cos(az), math.sin(el)])


def test_zenith_in_open_street():
    c = cy.preset("open")
    paths, blocked = cy.reflect_against_canyon(_sky(90, 0), np.zeros(3), c, 0.0, np.random.default_rng(0))
    assert paths == [] and not blocked


def test_hand_built_mirror_scene():
    """Street along East, 40 m facade 10 m to the north, satellite 20 deg up in the south."""
    c = cy.CanyonModel(half_width_left=10.0, half_width_right=10.0, fixed_heights=(40.0, 0.0))
    sat = _sky(20, 180)
    paths, blocked = cy.reflect_against_canyon(sat, np.zeros(3), c, 0.0, np.random.default_rng(0))
    assert not blocked and len(paths) == 1
    p = paths[0]
    # o lies where the ray to the satellite's mirror image crosses the wall
    assert p.point[1] == pytest.approx(10.0)
    r, e = 2e7, math.radians(20)
    image_y, image_z = 20.0 + r * math.cos(e), r * math.sin(e)
    assert p.point[2] == pytest.approx(10.0 * image_z / image_y, abs=1e-9)
    assert p.point[2] + c.antenna_height < 40.0
    delta = excess_path_length(sat, np.zeros(3), p.point)
    # far-field closed form: twice the wall distance projected on the horizontal LOS
    assert delta == pytest.approx(2 * 10.0 * math.cos(math.radians(20)), abs=1e-4)
    assert delta > 0
    assert 0.2 <= p.amplitude <= 0.8


def test_low_facade_gives_no_reflection():
    c = cy.CanyonModel(half_width_left=10.0, half_width_right=10.0, fixed_heights=(3.0, 0.0))
    paths, _ = cy.reflect_against_canyon(_sky(20, 180), np.zeros(3), c, 0.0, np.random.default_rng(0))
    assert paths == []


def test_blocking():
    c = cy.CanyonModel(half_width_left=10.0, half_width_right=10.0, fixed_heights=(40.0, 40.0))
    # low satellite across the street is shadowed, zenith is not
    assert cy.direct_blocked(_sky(20, 0), np.zeros(3), c, 0.0)
    assert not cy.direct_blocked(_sky(89, 0), np.zeros(3), c, 0.0)
    # along the street nothing blocks
    assert not cy.direct_blocked(_sky(5, 90), np.zeros(3), c, 0.0)


def test_heights_are_stable_and_rayleigh():
    c = cy.preset("urban", seed=3)
    h = [c.height(cy.LEFT, 10.0 * i + 1) for i in range(4000)]
    c2 = cy.preset("urban", seed=3)
    assert [c2.height(cy.LEFT, 10.0 * i + 1) for i in reversed(range(4000))][::-1] == h
    # Rayleigh mean = scale * sqrt(pi / 2)
    assert np.mean(h) == pytest.approx(20.0 * math.sqrt(math.pi / 2), rel=0.05)
    assert min(h) >= 0.0


def test_preset_validation():
    with pytest.raises(ValueError):
        cy.preset("downtown")
    with pytest.raises(ValueError):
        cy.CanyonModel(half_width_left=0.0)


@settings(max_examples=300, deadline=None)
@given(
    st.integers(0, 10**6),
    st.floats(5, 85),
    st.floats(0, 360),
    st.floats(-math.pi, math.pi),
    st.sampled_from(["urban", "suburban"]),
)
def test_law_of_reflection(seed, el, az, heading, name):
    c = cy.preset(name, seed=seed)
    sat = _sky(el, az)
    g = np.random.default_rng(seed)
    paths, _ = cy.reflect_against_canyon(sat, np.zeros(3), c, heading, g, along=100.0)
    for p in paths:
        assert abs(np.linalg.norm(p.direction) - 1) < 1e-9
        side = cy.LEFT if p.point @ cy.street_axes(heading)[1] > 0 else cy.RIGHT
        ia, ib = cy.incidence_angles(sat, np.zeros(3), p.point, cy.wall_normal(side, heading))
        assert abs(ia - ib) < 1e-9
