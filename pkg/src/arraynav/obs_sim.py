"""Per-antenna pseudorange and carrier-phase generation with multipath."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from arraynav import frames
from arraynav.canyon import reflect_against_canyon
from arraynav.constellation import GpsTime
from arraynav.errors import DestructiveInterferenceError, EmptyEpochError
from arraynav.multipath import (
    MultipathPath,
    ReceptionScenario,
    carrier_phase_error,
    excess_path_length,
    phase_delay,
    propagate_to_antennas,
    pseudorange_error,
)

DEFAULT_CUTOFF = math.radians(15.0)


@dataclass(frozen=True)
class NoiseConfig:
    sigma_range: float = 1.0
    sigma_phase: float = 0.001
    seed: int = 0

    def __post_init__(self):
        if self.sigma_range < 0 or self.sigma_phase < 0:
            raise ValueError("noise standard deviations must be non-negative")


@dataclass
class ArrayEpoch:
    """Observations of the visible satellites at all five antennas.

    ``pseudorange`` is (n, 5) metres, ``phase`` (n, 5) cycles. ``los`` rows
    are ENU unit vectors from antenna 1 and ``sat_positions`` ECEF metres.
    """

    time: GpsTime | None
    prns: list
    pseudorange: np.ndarray
    phase: np.ndarray
    scenarios: list
    los: np.ndarray
    elevation: np.ndarray
    sat_positions: np.ndarray
    paths: list = field(default_factory=list)
    receiver: tuple | None = None
    attitude: np.ndarray | None = None

    @property
    def gamma_truth(self):
        return np.array([int(s.contaminated) for s in self.scenarios], dtype=int)

    @property
    def n_sats(self):
        return len(self.prns)

    def subset(self, idx):
        idx = list(idx)
        return ArrayEpoch(
            time=self.time,
            prns=[self.prns[i] for i in idx],
            pseudorange=self.pseudorange[idx],
            phase=self.phase[idx],
            scenarios=[self.scenarios[i] for i in idx],
            los=self.los[idx],
            elevation=self.elevation[idx],
            sat_positions=self.sat_positions[idx],
            paths=[self.paths[i] for i in idx] if self.paths else [],
            receiver=self.receiver,
            attitude=self.attitude,
        )


def _fill_path(path, sat_enu, antennas, geometry, R, exact):
    """Excess path and phase delay of ``path`` at all five antennas.

    With ``exact`` the reflected and direct paths are measured to every
    antenna; otherwise antenna 1's value is carried to the others along the
    arrival direction (plane-wave relation).
    """
    if exact:
        excess = np.array([excess_path_length(sat_enu, x, path.point) for x in antennas])
    else:
        d1 = excess_path_length(sat_enu, antennas[0], path.point)
        excess = propagate_to_antennas(d1, path.direction, geometry, R)
    path.excess = excess
    path.phase_delay = phase_delay(excess, geometry.wavelength)
    return path


def generate_epoch(
    pose,
    sats,
    geometry,
    noise,
    rng,
    canyon=None,
    heading=None,
    along=0.0,
    cutoff=DEFAULT_CUTOFF,
    time=None,
    injected=None,
    blocked=(),
    integer_ambiguity=False,
    exact_excess=False,
):
    """Simulate one epoch.

    ``pose`` is ``((lat, lon, h), R)`` for antenna 1 with ``R`` mapping body to
    ENU. ``sats`` is ``(prns, ecef)``. Reflections come from ``canyon``
    (heading defaults to the pose yaw) and/or from ``injected``, a mapping
    ``prn -> [(amplitude, point_enu), ...]`` of extra reflectors that leave
    the direct path intact unless the PRN is listed in ``blocked``.
    Satellites with a blocked direct path and no reflection are dropped.

    Multipath delays follow the plane-wave relation from antenna 1 unless
    ``exact_excess``; reflection-only (NLOS) signals always use the full
    per-antenna geometry, since no direct ray remains to difference against.
    """
    receiver, R = pose
    R = np.asarray(R, dtype=float)
    prns, ecef = sats
    ecef = np.atleast_2d(np.asarray(ecef, dtype=float))
    H, el, _ = frames.los_and_angles(ecef, receiver)
    C = frames.enu_rotation(receiver[0], receiver[1])
    rx = frames.geodetic_to_ecef(*receiver)
    antennas = geometry.world_offsets(R)
    lam = geometry.wavelength
    if heading is None:
        heading = math.atan2(R[1, 0], R[0, 0])
    injected = injected or {}

    keep, pr_rows, ph_rows, scen, path_rows = [], [], [], [], []
    for s, prn in enumerate(prns):
        if el[s] < cutoff:
            continue
        sat_enu = C @ (ecef[s] - rx)
        shadowed = prn in blocked
        paths = []
        if canyon is not None:
            paths, hidden = reflect_against_canyon(sat_enu, antennas[0], canyon, heading, rng, along)
            shadowed = shadowed or hidden
        for amp, point in injected.get(prn, ()):
            point = np.asarray(point, dtype=float)
            q = point - antennas[0]
            paths.append(MultipathPath(float(amp), point, q / np.linalg.norm(q)))
        for p in paths:
            _fill_path(p, sat_enu, antennas, geometry, R, exact_excess or shadowed)

        ranges = np.linalg.norm(sat_enu - antennas, axis=1)
        if shadowed and not paths:
            continue
        if shadowed:
            scenario = ReceptionScenario.NLOS
            dominant = max(paths, key=lambda p: p.amplitude)
            pr = ranges + dominant.excess
            ph = (ranges + dominant.excess) / lam
        elif paths:
            try:
                psi = carrier_phase_error([(p.amplitude, p.phase_delay) for p in paths])
                dp = pseudorange_error([(p.amplitude, p.excess, p.phase_delay) for p in paths])
            except DestructiveInterferenceError:
                continue
            scenario = ReceptionScenario.MULTIPATH
            pr = ranges + dp
            ph = ranges / lam + psi / (2 * np.pi)
        else:
            scenario = ReceptionScenario.LOS
            pr = ranges.copy()
            ph = ranges / lam
        keep.append(s)
        pr_rows.append(pr)
        ph_rows.append(ph)
        scen.append(scenario)
        path_rows.append(paths)

    if not keep:
        raise EmptyEpochError("no satellite is receivable at this epoch")

    pr = np.array(pr_rows)
    ph = np.array(ph_rows)
    if noise.sigma_range > 0:
        pr = pr + rng.normal(0.0, noise.sigma_range, pr.shape)
    if noise.sigma_phase > 0:
        ph = ph + rng.normal(0.0, noise.sigma_phase, ph.shape) / lam
    if integer_ambiguity:
        ph = ph + rng.integers(-10000, 10000, ph.shape)
    return ArrayEpoch(
        time=time,
        prns=[prns[s] for s in keep],
        pseudorange=pr,
        phase=ph,
        scenarios=scen,
        los=H[keep],
        elevation=el[keep],
        sat_positions=ecef[keep],
        paths=path_rows,
        receiver=tuple(receiver),
        attitude=R,
    )
