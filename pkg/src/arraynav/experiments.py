"""Monte-Carlo static benchmark and moving-vehicle simulation."""

from __future__ import annotations

import configparser
import csv
import io
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from arraynav import constellation as cst
from arraynav import frames, ingest, so3
from arraynav.attitude import SubsetSolver
from arraynav.canyon import preset, reflect_against_canyon
from arraynav.detector import (
    DetectorConfig,
    baseline_error_deg,
    dbscan_detect,
    no_detection,
    ransac_detect,
    score_detection,
)
from arraynav.errors import ArrayNavError, ConfigError, NumericError, ScenarioError
from arraynav.geometry import ArrayGeometry
from arraynav.obs_sim import NoiseConfig, generate_epoch
from arraynav.spp import spp_solve
from arraynav.ukf import ArrayMeasurement, ProcessNoise, Ukf, UkfState, initial_covariance

N_SATS = 7
DETECTORS = ("ransac", "dbscan", "none")
MIN_FREE = 4


def _floats(text):
    return [float(v) for v in str(text).replace(",", " ").split()]


def _ints(text):
    return [int(v) for v in str(text).replace(",", " ").split()]


@dataclass
class RunConfig:
    scenario: str = "static-bench"
    almanac: str | None = None
    trajectory: str = "builtin"
    canyon: str = "urban"
    sigma_phase_mm: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 3.0, 5.0])
    n_mp: list = field(default_factory=lambda: [0, 1, 2, 3])
    trials: int = 200
    detector: str = "both"
    seed: int = 0
    out_dir: str = "out"
    site_lat_deg: float = 49.011
    site_lon_deg: float = 8.423
    site_height: float = 112.0
    gps_week: int = 245
    gps_tow: float = 496800.0
    sigma_range: float = 1.0
    drive_sigma_phase_mm: float = 1.0
    ref_perturb_deg: float = 0.5
    eps_inlier: float = 0.02
    cutoff_deg: float = 15.0
    duration: float = 60.0
    imu_noise: bool = True
    attitude_gate: float = 0.2
    canyon_half_width: float | None = None
    canyon_rayleigh_scale: float | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.scenario not in ("static-bench", "drive-sim"):
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not self.sigma_phase_mm or not self.n_mp:
            raise ConfigError("sweep lists must not be empty")
        if any(s < 0 for s in self.sigma_phase_mm) or self.sigma_range < 0:
            raise ConfigError("noise levels must be non-negative")
        if any(not 0 <= n <= N_SATS for n in self.n_mp):
            raise ConfigError(f"n_mp entries must lie in [0, {N_SATS}]")
        if self.detector not in ("ransac", "dbscan", "none", "both"):
            raise ConfigError(f"unknown detector {self.detector!r}")
        if self.canyon not in ("suburban", "urban", "open", "custom"):
            raise ConfigError(f"unknown canyon preset {self.canyon!r}")
        if self.eps_inlier <= 0:
            raise ConfigError("eps_inlier must be positive")

    @classmethod
    def from_text(cls, text, **overrides):
        """Parse ``key = value`` lines (``#`` comments, optional ``[run]`` header)."""
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        first = next((ln.strip() for ln in text.splitlines()
                      if ln.strip() and not ln.strip().startswith(("#", ";"))), "")
        body = text if first.startswith("[") else "[run]\n" + text
        try:
            parser.read_string(body)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        values = {}
        for section in parser.sections():
            values.update(parser[section])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values):
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            name = key.strip().replace("-", "_")
            if name not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[name] = _coerce(name, raw)
        return cls(**kwargs)

    @property
    def site(self):
        return (math.radians(self.site_lat_deg), math.radians(self.site_lon_deg), self.site_height)

    @property
    def start(self):
        return cst.GpsTime(self.gps_week, self.gps_tow)

    def detectors(self):
        if self.detector == "both":
            return ["ransac", "dbscan"]
        return [self.detector]

    def canyon_model(self, seed):
        name = "urban" if self.canyon == "custom" else self.canyon
        extra = {}
        if self.canyon_half_width is not None:
            extra.update(half_width_left=self.canyon_half_width, half_width_right=self.canyon_half_width)
        if self.canyon_rayleigh_scale is not None:
            extra["rayleigh_scale"] = self.canyon_rayleigh_scale
        return preset(name, seed=seed, **extra)


_LISTS = {"sigma_phase_mm": _floats, "n_mp": _ints}
_BOOLS = {"imu_noise"}


def _coerce(name, raw):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if name in _LISTS:
            return _LISTS[name](raw)
        if name in _BOOLS:
            low = raw.lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("1", "true", "yes", "on")
        kind = RunConfig.__dataclass_fields__[name].type
        if name in ("trials", "seed", "gps_week"):
            return int(raw)
        if "float" in str(kind):
            return None if raw.lower() == "none" else float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def _load_almanac(cfg):
    if cfg.almanac:
        return cst.load_yuma(cfg.almanac)
    return cst.load_bundled()


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "nan" if not math.isfinite(x) else format(float(x), ".9g")
    return str(x)


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    text = buf.getvalue()
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text


# --------------------------------------------------------------------------
# static benchmark

STATIC_COLUMNS = (
    "sigma_phase_mm",
    "n_mp",
    "detector",
    "trials",
    "success_rate",
    "false_negative_rate",
    "false_positive_rate",
    "misclassification_rate",
    "baseline_mae_deg",
    "baseline_mae_no_exclusion_deg",
    "exclusion_better_fraction",
    "mean_attitude_solves",
)


@dataclass
class StaticTrial:
    gamma_truth: np.ndarray
    R_truth: np.ndarray
    results: dict


def visible_satellites(cfg, records=None):
    records = records if records is not None else _load_almanac(cfg)
    prns, ecef = cst.positions(records, cfg.start)
    if not prns:
        raise ScenarioError("almanac has no healthy satellites")
    _, el, _ = frames.los_and_angles(ecef, cfg.site)
    idx = [i for i in range(len(prns)) if el[i] >= math.radians(cfg.cutoff_deg)]
    if len(idx) < N_SATS:
        raise ScenarioError(
            f"only {len(idx)} satellites above {cfg.cutoff_deg} deg at the configured site and "
            f"epoch; the benchmark needs {N_SATS}, try another gps_tow"
        )
    return [prns[i] for i in idx], ecef[idx]


def _reflection(rng, sat_enu, cfg, tries=64):
    """Paths from a random street canyon that reflects this satellite."""
    for _ in range(tries):
        canyon = cfg.canyon_model(int(rng.integers(2**31)))
        heading = rng.uniform(-math.pi, math.pi)
        paths, blocked = reflect_against_canyon(
            sat_enu, np.zeros(3), canyon, heading, rng, along=rng.uniform(0.0, 1000.0)
        )
        if paths:
            return paths, blocked
    return None


def static_trial(cfg, vis, sigma_m, n_mp, rng, detectors, geometry=None):
    geometry = geometry or ArrayGeometry()
    prns, ecef = vis
    pick = np.sort(rng.choice(len(prns), N_SATS, replace=False))
    sats = ([prns[i] for i in pick], ecef[pick])
    R = so3.rpy_to_so3(
        [rng.normal(0, math.radians(3)), rng.normal(0, math.radians(3)), rng.uniform(-math.pi, math.pi)]
    )
    C = frames.enu_rotation(cfg.site[0], cfg.site[1])
    rx = frames.geodetic_to_ecef(*cfg.site)
    injected, blocked = {}, set()
    for s in rng.permutation(N_SATS):
        if len(injected) == n_mp:
            break
        found = _reflection(rng, C @ (sats[1][s] - rx), cfg)
        if found is None:
            continue
        paths, hidden = found
        injected[sats[0][s]] = [(p.amplitude, p.point) for p in paths]
        if hidden:
            blocked.add(sats[0][s])
    if len(injected) < n_mp:
        raise ScenarioError(f"canyon preset {cfg.canyon!r} cannot reflect {n_mp} satellites here")
    epoch = generate_epoch(
        (cfg.site, R),
        sats,
        geometry,
        NoiseConfig(cfg.sigma_range, sigma_m),
        rng,
        cutoff=math.radians(cfg.cutoff_deg),
        injected=injected,
        blocked=blocked,
        integer_ambiguity=True,
    )
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    R_ref = R @ so3.exp_so3(axis * math.radians(cfg.ref_perturb_deg))
    dcfg = DetectorConfig(eps_inlier=cfg.eps_inlier)
    results = {}
    for name in detectors:
        if name == "ransac":
            results[name] = ransac_detect(epoch, geometry, R_ref, dcfg, rng)
        elif name == "dbscan":
            results[name] = dbscan_detect(epoch, geometry, R_ref, dcfg)
        else:
            results[name] = no_detection(epoch, geometry, R_ref)
    return StaticTrial(epoch.gamma_truth, R, results)


def run_static_bench(cfg, out_path=None):
    """One row per (sigma, n_mp, detector) cell; returns ``(csv_text, rows)``."""
    vis = visible_satellites(cfg)
    names = cfg.detectors()
    run = list(dict.fromkeys(names + ["none"]))
    rows = []
    for ci, sigma_mm in enumerate(cfg.sigma_phase_mm):
        for ni, n_mp in enumerate(cfg.n_mp):
            trials = []
            for k in range(cfg.trials):
                rng = np.random.default_rng([cfg.seed, ci, ni, k])
                trials.append(static_trial(cfg, vis, sigma_mm * 1e-3, n_mp, rng, run))
            base = [baseline_error_deg(t.results["none"].R_best, t.R_truth) for t in trials]
            base_metrics = score_detection([(t.results["none"], t.gamma_truth, t.R_truth) for t in trials])
            for name in names:
                items = [(t.results[name], t.gamma_truth, t.R_truth) for t in trials]
                m = score_detection(items)
                better = np.mean(
                    [baseline_error_deg(t.results[name].R_best, t.R_truth) < b for t, b in zip(trials, base)]
                )
                solves = np.mean([t.results[name].solves for t in trials])
                rows.append(
                    (
                        sigma_mm,
                        n_mp,
                        name,
                        cfg.trials,
                        m.success_rate,
                        m.false_negative_rate,
                        m.false_positive_rate,
                        m.misclassification_rate,
                        m.baseline_mae,
                        base_metrics.baseline_mae,
                        better,
                        solves,
                    )
                )
    return write_csv(out_path, STATIC_COLUMNS, rows), rows


# --------------------------------------------------------------------------
# moving vehicle

TRAJECTORY_COLUMNS = (
    "t",
    "truth_e", "truth_n", "truth_u",
    "spp_all_e", "spp_all_n", "spp_all_u",
    "ukf_all_e", "ukf_all_n", "ukf_all_u",
    "proposed_e", "proposed_n", "proposed_u",
    "truth_roll_deg", "truth_pitch_deg", "truth_yaw_deg",
    "proposed_roll_deg", "proposed_pitch_deg", "proposed_yaw_deg",
    "visible", "contaminated_truth", "flagged", "detection_success", "propagation_only",
    "proposed_att_err_deg", "ukf_all_att_err_deg",
)
SUMMARY_COLUMNS = (
    "epochs",
    "position_mse_spp_all_m2",
    "position_mse_ukf_all_m2",
    "position_mse_proposed_m2",
    "attitude_mae_proposed_deg",
    "attitude_mae_ukf_all_deg",
    "success_rate",
    "propagation_only_epochs",
)


def load_trajectory(cfg, rng=None):
    src = cfg.trajectory
    if src == "builtin":
        samples = ingest.synthetic_trajectory(duration=cfg.duration, origin=cfg.site)
        if cfg.imu_noise:
            samples = ingest.synth_imu_from_truth(samples, ProcessNoise(), rng or np.random.default_rng(cfg.seed))
        return samples
    path = Path(src)
    if path.is_dir():
        return ingest.parse_oxts(path)
    return ingest.parse_trajectory_csv(path)


def _geodetic(enu, origin):
    return frames.ecef_to_geodetic(frames.enu_to_ecef(enu, origin))


def _spp_enu(pr, sat_ecef, guess_ecef, origin):
    sol = spp_solve(pr, sat_ecef, guess_ecef)
    C = frames.enu_rotation(origin[0], origin[1])
    return frames.ecef_to_enu(sol.position, origin), C @ sol.covariance[:3, :3] @ C.T


@dataclass
class _Fix:
    R: np.ndarray | None
    er: float
    positions: np.ndarray | None
    cov: np.ndarray | None


def _array_fix(epoch, idx, R_att, er, guess_ecef, origin, sigma_range):
    """Per-antenna SPP on satellites ``idx``; None entries when it fails."""
    positions, covs = [], []
    try:
        for r in range(5):
            p, c = _spp_enu(epoch.pseudorange[idx, r], epoch.sat_positions[idx], guess_ecef, origin)
            positions.append(p)
            covs.append(sigma_range**2 * c + 1e-6 * np.eye(3))
    except NumericError:
        return _Fix(R_att, er, None, None)
    return _Fix(R_att, er, np.array(positions), np.array(covs))


def _measurement(fix):
    rpy = so3.so3_to_rpy(fix.R) if fix.R is not None else None
    if rpy is None and fix.positions is None:
        return None
    return ArrayMeasurement(rpy, fix.positions, er_best=fix.er, position_cov=fix.cov)


def _rpy_err_deg(R_est, R_true):
    d = so3.wrap_angle(np.asarray(so3.so3_to_rpy(R_est)) - np.asarray(so3.so3_to_rpy(R_true)))
    return np.degrees(np.abs(d))


class DriveSimulation:
    """Epoch loop over a truth trajectory.

    ``overrides`` maps an epoch index to ``{"injected": ..., "blocked": ...}``
    forwarded to the epoch generator, to engineer particular epochs.
    """

    def __init__(self, cfg, samples=None, records=None, geometry=None, overrides=None):
        self.cfg = cfg
        self.rng = np.random.default_rng([cfg.seed, 1])
        self.samples = samples if samples is not None else load_trajectory(cfg, np.random.default_rng([cfg.seed, 2]))
        if len(self.samples) < 2:
            raise ScenarioError("trajectory needs at least two samples")
        self.records = records if records is not None else _load_almanac(cfg)
        self.geometry = geometry or ArrayGeometry()
        self.origin = self.samples[0].position
        self.truth_enu = ingest.enu_track(self.samples, self.origin)
        self.canyon = cfg.canyon_model(cfg.seed)
        self.noise = NoiseConfig(cfg.sigma_range, cfg.drive_sigma_phase_mm * 1e-3, cfg.seed)
        self.dcfg = DetectorConfig(eps_inlier=cfg.eps_inlier)
        self.overrides = overrides or {}
        self.along = np.concatenate(
            [[0.0], np.cumsum(np.linalg.norm(np.diff(self.truth_enu[:, :2], axis=0), axis=1))]
        )

    def epoch(self, k):
        s = self.samples[k]
        t = cst.GpsTime(self.cfg.gps_week, self.cfg.gps_tow + s.t)
        sats = cst.positions(self.records, t)
        extra = self.overrides.get(k, {})
        return generate_epoch(
            (s.position, s.R),
            sats,
            self.geometry,
            self.noise,
            self.rng,
            canyon=self.canyon,
            heading=s.rpy[2],
            along=float(self.along[k]),
            cutoff=math.radians(self.cfg.cutoff_deg),
            time=t,
            injected=extra.get("injected"),
            blocked=extra.get("blocked", ()),
            integer_ambiguity=True,
        )

    def _los(self, epoch, enu):
        H, _, _ = frames.los_and_angles(epoch.sat_positions, _geodetic(enu, self.origin))
        return H

    def _detect(self, epoch, H, R_ref):
        view = epoch.subset(range(epoch.n_sats))
        view.los = H
        name = self.cfg.detector if self.cfg.detector != "both" else "ransac"
        if name == "dbscan":
            return dbscan_detect(view, self.geometry, R_ref, self.dcfg)
        if name == "none":
            return no_detection(view, self.geometry, R_ref)
        return ransac_detect(view, self.geometry, R_ref, self.dcfg, self.rng)

    def _all_sat_fix(self, epoch, H, R_ref, guess):
        solver = SubsetSolver(epoch.phase, self.geometry, H)
        R_all = solver.solve(range(epoch.n_sats), strict=False)
        er = so3.geodesic_distance(R_ref, R_all) if R_all is not None else 0.0
        return _array_fix(epoch, list(range(epoch.n_sats)), R_all, er, guess, self.origin, self.cfg.sigma_range)

    def run(self):
        cfg = self.cfg
        rows = []
        filt = filt_all = None
        for k, s in enumerate(self.samples):
            if k and filt is not None:
                u = self.samples[k - 1].imu
                filt.propagate(u)
                filt_all.propagate(u)
            epoch = self.epoch(k)
            guess = frames.enu_to_ecef(filt.x.P if filt is not None else np.zeros(3), self.origin)
            pred_enu = filt.x.P if filt is not None else self.truth_enu[0]
            H = self._los(epoch, pred_enu)
            R_ref = filt.x.R if filt is not None else s.R
            flagged = np.ones(epoch.n_sats, dtype=int)
            prop_only = True
            fix = None
            try:
                res = self._detect(epoch, H, R_ref)
                flagged = res.gamma
                free = list(res.s_best)
                if len(free) >= MIN_FREE and res.R_best is not None and res.er_best <= cfg.attitude_gate:
                    fix = _array_fix(epoch, free, res.R_best, res.er_best, guess, self.origin, cfg.sigma_range)
                    prop_only = fix.positions is None
            except NumericError:
                res = None
            spp_all = np.full(3, np.nan)
            try:
                spp_all, _ = _spp_enu(epoch.pseudorange[:, 0], epoch.sat_positions, guess, self.origin)
            except NumericError:
                pass
            if filt is None:
                if fix is None or fix.positions is None:
                    rows.append(self._row(s, k, epoch, None, None, None, spp_all, flagged, True))
                    continue
                filt = Ukf(UkfState(fix.R, fix.positions[0], np.array(s.velocity)), initial_covariance(), self.geometry)
                all_fix = self._all_sat_fix(epoch, H, R_ref, guess)
                R0 = all_fix.R if all_fix.R is not None else fix.R
                P0 = all_fix.positions[0] if all_fix.positions is not None else fix.positions[0]
                filt_all = Ukf(UkfState(R0, P0, np.array(s.velocity)), initial_covariance(), self.geometry)
            else:
                if not prop_only:
                    filt.update(_measurement(fix))
                all_fix = self._all_sat_fix(epoch, H, filt_all.x.R, guess)
                z_all = _measurement(all_fix)
                if z_all is not None:
                    filt_all.update(z_all)
            rows.append(self._row(s, k, epoch, filt, filt_all, res, spp_all, flagged, prop_only))
        return rows

    def _row(self, s, k, epoch, filt, filt_all, res, spp_all, flagged, prop_only):
        truth = self.truth_enu[k]
        nan3 = np.full(3, np.nan)
        prop = filt.x.P if filt is not None else nan3
        alle = filt_all.x.P if filt_all is not None else nan3
        t_rpy = np.degrees(np.asarray(s.rpy))
        p_rpy = np.degrees(so3.so3_to_rpy(filt.x.R)) if filt is not None else nan3
        g = epoch.gamma_truth
        ok = int(res is not None and np.array_equal(flagged, g))
        return (
            s.t, *truth, *spp_all, *alle, *prop, *t_rpy, *p_rpy,
            epoch.n_sats, int(g.sum()), int(np.sum(flagged)), ok, int(prop_only),
            _rpy_err_deg(filt.x.R, s.R).mean() if filt is not None else np.nan,
            _rpy_err_deg(filt_all.x.R, s.R).mean() if filt_all is not None else np.nan,
        )


def summarize(rows):
    arr = np.array(rows, dtype=float)
    truth = arr[:, 1:4]

    def mse(block):
        e = arr[:, block] - truth
        ok = np.all(np.isfinite(e), axis=1)
        return float(np.mean(np.sum(e[ok] ** 2, axis=1))) if ok.any() else float("nan")

    def nanmean(v):
        v = v[np.isfinite(v)]
        return float(v.mean()) if v.size else float("nan")

    col = {c: i for i, c in enumerate(TRAJECTORY_COLUMNS)}
    att = arr[:, col["proposed_att_err_deg"]]
    att_all = arr[:, col["ukf_all_att_err_deg"]]
    det = arr[:, col["detection_success"]]
    return {
        "epochs": len(rows),
        "position_mse_spp_all_m2": mse(slice(4, 7)),
        "position_mse_ukf_all_m2": mse(slice(7, 10)),
        "position_mse_proposed_m2": mse(slice(10, 13)),
        "attitude_mae_proposed_deg": nanmean(att),
        "attitude_mae_ukf_all_deg": nanmean(att_all),
        "success_rate": float(np.mean(det)),
        "propagation_only_epochs": int(np.sum(arr[:, col["propagation_only"]])),
    }


def run_drive_sim(cfg, out_dir=None, samples=None, overrides=None):
    """Returns ``(trajectory_csv, summary_csv, summary_dict)``."""
    sim = DriveSimulation(cfg, samples=samples, overrides=overrides)
    rows = sim.run()
    summary = summarize(rows)
    out = Path(out_dir) if out_dir is not None else None
    traj = write_csv(out / "drive_trajectory.csv" if out else None, TRAJECTORY_COLUMNS, rows)
    summ = write_csv(out / "drive_summary.csv" if out else None, SUMMARY_COLUMNS,
                     [[summary[c] for c in SUMMARY_COLUMNS]])
    return traj, summ, summary


# --------------------------------------------------------------------------
# almanac inspection

def inspect_almanac(path=None):
    """Text table of PRN, health, orbit radius and inclination."""
    records = cst.load_yuma(path) if path else cst.load_bundled()
    lines = [f"{len(records)} records"]
    if records:
        lines.append(f"{'PRN':>4} {'health':>6} {'radius_km':>10} {'incl_deg':>9}")
        for r in records:
            lines.append(
                f"{r.prn:>4} {r.health:>6} {r.semi_major_axis / 1000:>10.1f} {math.degrees(r.i):>9.3f}"
            )
    return "\n".join(lines) + "\n"


__all__ = [
    "RunConfig",
    "run_static_bench",
    "run_drive_sim",
    "inspect_almanac",
    "DriveSimulation",
    "ArrayNavError",
]
