import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arraynav import so3
from arraynav.detector import (
    DetectionResult,
    DetectorConfig,
    baseline_error_deg,
    dbscan_detect,
    n_iterations,
    no_detection,
    ransac_detect,
    score_detection,
    subset_count,
)
from arraynav.errors import CombinatorialBlowupError, InsufficientSatellitesError
from arraynav.geometry import ArrayGeometry
from arraynav.obs_sim import ArrayEpoch

from conftest import plane_wave_phases, well_spread_los

GEO = ArrayGeometry()


def make_epoch(H, phases):
    n = len(H)
    return ArrayEpoch(None, list(range(n)), np.zeros((n, 5)), phases, [None] * n, H, np.zeros(n), np.zeros((n, 3)))


def contaminate(ph, sats, g):
    """Single-difference phase errors beyond a quarter cycle on ``sats``."""
    ph = ph.copy()
    for s in sats:
        ph[s, 1:] += g.uniform(0.26, 0.45, 4) * g.choice([-1, 1], 4)
    return ph


def scenario(seed, n=7, n_bad=0, sigma=0.0, perturb_deg=0.0):
    g = np.random.default_rng(seed)
    R = so3.random_rotation(g)
    H = well_spread_los(g, n)
    ph = plane_wave_phases(H, R, GEO, g, sigma=sigma)
    bad = g.choice(n, n_bad, replace=False)
    ph = contaminate(ph, bad, g)
    axis = g.normal(size=3)
    axis /= np.linalg.norm(axis)
    R_ref = R @ so3.exp_so3(axis * math.radians(perturb_deg))
    truth = np.zeros(n, dtype=int)
    truth[bad] = 1
    return make_epoch(H, ph), R, R_ref, truth, g


def test_iteration_count():
    assert n_iterations(0.99, 0.3, 4) == 17
    assert n_iterations(0.99, 0.5, 4) == 72
    assert n_iterations(0.99, 0.0, 4) == 1
    assert n_iterations(0.999999, 0.99, 4) == 10000
    assert math.log(0.01) / math.log(1 - 0.7**4) == pytest.approx(16.77, abs=0.01)


def test_config_invariants():
    for bad in (dict(p=1.0), dict(eta=1.0), dict(m=2), dict(n_min=3)):
        with pytest.raises(ValueError):
            DetectorConfig(**bad)
    assert DetectorConfig().iterations == 17


def test_ransac_all_clean():
    ep, R, _, _, g = scenario(1)
    res = ransac_detect(ep, GEO, R, rng=g)
    assert res.gamma.tolist() == [0] * 7
    assert res.er_best < 1e-6


def test_ransac_needs_m_satellites():
    ep, R, _, _, g = scenario(2, n=3)
    with pytest.raises(InsufficientSatellitesError):
        ransac_detect(ep, GEO, R, rng=g)


def _flag_rate(detect, trials=500):
    hit = 0
    for k in range(trials):
        ep, _, R_ref, truth, g = scenario([7, k], n_bad=2, sigma=0.001)
        res = detect(ep, R_ref, g)
        hit += bool(np.all(res.gamma[truth == 1] == 1))
    return hit / trials


def test_ransac_flags_two_contaminated():
    rate = _flag_rate(lambda ep, R_ref, g: ransac_detect(ep, GEO, R_ref, DetectorConfig(), g))
    assert rate >= 0.95


def test_dbscan_flags_two_contaminated():
    rate = _flag_rate(lambda ep, R_ref, g: dbscan_detect(ep, GEO, R_ref, DetectorConfig()))
    assert rate >= 0.95


def test_dbscan_all_clean():
    ep, R, _, _, _ = scenario(3)
    res = dbscan_detect(ep, GEO, R)
    assert res.s_best == list(range(7)) and res.gamma.sum() == 0


def test_dbscan_blowup_guard():
    assert subset_count(15, 4) == 32192
    ep, R, _, _, _ = scenario(4, n=15)
    with pytest.raises(CombinatorialBlowupError):
        dbscan_detect(ep, GEO, R)
    with pytest.raises(InsufficientSatellitesError):
        dbscan_detect(scenario(4, n=3)[0], GEO, R)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 3), st.integers(7, 12))
def test_ransac_invariants(seed, n_bad, n):
    ep, R, R_ref, _, _ = scenario(seed, n=n, n_bad=n_bad, sigma=0.001, perturb_deg=0.5)
    cfg = DetectorConfig()
    a = ransac_detect(ep, GEO, R_ref, cfg, np.random.default_rng(seed))
    b = ransac_detect(ep, GEO, R_ref, cfg, np.random.default_rng(seed))
    init = no_detection(ep, GEO, R_ref)
    # keeps the best: never worse than the all-satellite start
    assert a.er_best <= init.er_best + 1e-15
    # flags and consensus set are complementary
    assert all((gi == 0) == (i in a.s_best) for i, gi in enumerate(a.gamma))
    # determinism
    assert a.gamma.tolist() == b.gamma.tolist() and a.er_best == b.er_best
    # per-iteration work: one seed fit plus one fit per remaining satellite
    assert a.hypothesis_solves <= cfg.iterations * (n - cfg.m + 1)
    assert a.iterations <= cfg.iterations


def test_detection_result_complementarity_enforced():
    with pytest.raises(AssertionError):
        DetectionResult(gamma=np.array([0, 1]), s_best=[1], R_best=np.eye(3), er_best=0.0)


def test_score_examples():
    R = np.eye(3)
    truth = np.array([0, 1, 0, 1])
    perfect = DetectionResult(truth.copy(), [0, 2], R, 0.0)
    m = score_detection([(perfect, truth, R)] * 3)
    assert (m.success_rate, m.false_negative_rate, m.false_positive_rate) == (1.0, 0.0, 0.0)
    assert m.baseline_mae == 0.0
    everything = DetectionResult(np.ones(4, dtype=int), [], R, 0.0)
    m = score_detection([(everything, truth)])
    assert m.false_positive_rate == 1.0 and m.false_negative_rate == 0.0


def test_score_hand_counted():
    R = np.eye(3)
    t1, t2, t3 = np.array([1, 0, 0, 0]), np.array([1, 1, 0, 0]), np.array([0, 0, 0, 0])
    r1 = DetectionResult(np.array([1, 0, 0, 0]), [1, 2, 3], R, 0.0)  # right
    r2 = DetectionResult(np.array([1, 0, 1, 0]), [1, 3], R, 0.0)  # one miss, one false alarm
    r3 = DetectionResult(np.array([0, 0, 0, 1]), [0, 1, 2], R, 0.0)  # one false alarm
    m = score_detection([(r1, t1), (r2, t2), (r3, t3)])
    assert m.success_rate == pytest.approx(1 / 3)
    assert m.false_negative_rate == pytest.approx(1 / 3)  # 1 of 3 contaminated
    assert m.false_positive_rate == pytest.approx(2 / 9)  # 2 of 9 clean
    assert m.misclassification_rate == pytest.approx(3 / 12)


def test_score_no_contaminated_flag():
    R = np.eye(3)
    r = DetectionResult(np.zeros(3, dtype=int), [0, 1, 2], R, 0.0)
    m = score_detection([(r, np.zeros(3, dtype=int))])
    assert m.false_negative_rate == 0.0 and m.fn_undefined
    with pytest.raises(ValueError):
        score_detection([])


def test_baseline_error():
    assert baseline_error_deg(np.eye(3), np.eye(3)) == 0.0
    # yaw by 1 deg tilts both baseline directions by 1 deg
    assert baseline_error_deg(so3.rot_z(math.radians(1)), np.eye(3)) == pytest.approx(1.0)
    # roll leaves x untouched and tilts y
    assert baseline_error_deg(so3.rot_x(math.radians(2)), np.eye(3)) == pytest.approx(1.0)
