"""Ground-truth trajectories and IMU streams.

Two on-disk formats are read:

* KITTI OXTS drives: ``oxts/timestamps.txt`` plus one ``oxts/data/NNNNNNNNNN.txt``
  packet per timestamp, each a single line of 30 space-separated numbers.
* A generic CSV with header ``t,lat,lon,alt,roll,pitch,yaw,vn,ve,vu,ax,ay,az,wx,wy,wz``
  (seconds, radians, metres, m/s, m/s^2, rad/s).

Body axes are x forward, y left, z up, the same convention as the array.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path

import numpy as np

from arraynav import frames, so3
from arraynav.errors import EmptyStreamError, OrderingError, ParseError, SchemaError
from arraynav.ukf import GRAVITY, ImuSample

# KITTI OXTS packet layout (0-based field indices)
OXTS_FIELDS = 30
OXTS_LAT, OXTS_LON, OXTS_ALT = 0, 1, 2
OXTS_ROLL, OXTS_PITCH, OXTS_YAW = 3, 4, 5
OXTS_VN, OXTS_VE, OXTS_VU = 6, 7, 10
OXTS_ACC = slice(11, 14)
OXTS_GYRO = slice(17, 20)

CSV_COLUMNS = ("t", "lat", "lon", "alt", "roll", "pitch", "yaw", "vn", "ve", "vu",
               "ax", "ay", "az", "wx", "wy", "wz")

# the reference drive area (Karlsruhe)
DEFAULT_ORIGIN = (math.radians(49.011), math.radians(8.423), 112.0)


@dataclass(frozen=True)
class TrajectorySample:
    """Truth at one instant. Angles in radians, velocity ENU.

    ``omega`` and ``acc`` are body-frame IMU readings held until the next
    sample; ``dt`` is the gap to that sample (None for a lone sample).
    """

    t: float
    lat: float
    lon: float
    alt: float
    rpy: tuple
    velocity: tuple
    omega: tuple = (0.0, 0.0, 0.0)
    acc: tuple = (0.0, 0.0, 0.0)
    dt: float | None = None

    @property
    def position(self):
        return (self.lat, self.lon, self.alt)

    @property
    def R(self):
        return so3.rpy_to_so3(self.rpy)

    @property
    def imu(self):
        if self.dt is None:
            return None
        return ImuSample(np.array(self.omega), np.array(self.acc), self.dt)


def _with_steps(samples):
    """Attach inter-sample gaps, checking strict time order."""
    if not samples:
        raise EmptyStreamError("no trajectory samples")
    out = []
    for i, s in enumerate(samples):
        if i + 1 < len(samples):
            dt = samples[i + 1].t - s.t
            if not dt > 0:
                raise OrderingError(f"timestamps not strictly increasing at sample {i + 1}")
        else:
            dt = out[-1].dt if out else None
        out.append(replace(s, dt=dt))
    return out


def _parse_stamp(text, line):
    text = text.strip()
    head, _, frac = text.partition(".")
    try:
        base = datetime.strptime(head, "%Y-%m-%d %H:%M:%S")
        ns = int((frac + "000000000")[:9]) if frac else 0
    except ValueError as exc:
        raise ParseError(f"bad timestamp {text!r}", line) from exc
    return base, ns


def _oxts_dir(path):
    path = Path(path)
    if (path / "oxts").is_dir():
        path = path / "oxts"
    return path


def parse_oxts(path):
    """Read a KITTI OXTS directory (the drive or its ``oxts`` folder)."""
    root = _oxts_dir(path)
    stamp_file = root / "timestamps.txt"
    data_dir = root / "data"
    if not stamp_file.is_file() or not data_dir.is_dir():
        raise EmptyStreamError(f"no OXTS timestamps/data under {root}")
    lines = [ln for ln in stamp_file.read_text(errors="replace").splitlines() if ln.strip()]
    files = sorted(data_dir.glob("*.txt"))
    if not files and not lines:
        raise EmptyStreamError(f"empty OXTS stream in {root}")
    if len(files) != len(lines):
        raise ParseError(f"{len(files)} OXTS packets but {len(lines)} timestamps", None)

    stamps = [_parse_stamp(ln, i + 1) for i, ln in enumerate(lines)]
    t0, ns0 = stamps[0]
    samples = []
    for k, (fname, (base, ns)) in enumerate(zip(files, stamps)):
        t = (base - t0).total_seconds() + (ns - ns0) * 1e-9
        text = fname.read_text(errors="replace").strip().splitlines()
        if len(text) != 1:
            raise ParseError(f"{fname.name}: expected one record, found {len(text)} lines", k + 1)
        fields = text[0].split()
        if len(fields) != OXTS_FIELDS:
            raise ParseError(
                f"{fname.name}: expected {OXTS_FIELDS} fields, found {len(fields)}", k + 1
            )
        try:
            v = [float(f) for f in fields]
        except ValueError as exc:
            raise ParseError(f"{fname.name}: non-numeric field", k + 1) from exc
        if not all(math.isfinite(x) for x in v[:20]):
            raise ParseError(f"{fname.name}: non-finite value", k + 1)
        samples.append(
            TrajectorySample(
                t=t,
                lat=math.radians(v[OXTS_LAT]),
                lon=math.radians(v[OXTS_LON]),
                alt=v[OXTS_ALT],
                rpy=(v[OXTS_ROLL], v[OXTS_PITCH], v[OXTS_YAW]),
                velocity=(v[OXTS_VE], v[OXTS_VN], v[OXTS_VU]),
                acc=tuple(v[OXTS_ACC]),
                omega=tuple(v[OXTS_GYRO]),
            )
        )
    return _with_steps(samples)


def parse_trajectory_csv(source):
    """Read the generic CSV (path, text or stream)."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        try:
            text = Path(source).read_text(errors="replace")
        except OSError as exc:
            raise ParseError(f"cannot read {source}: {exc}", None) from exc
    elif isinstance(source, bytes):
        text = source.decode("utf-8", errors="replace")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8", errors="replace")
    try:
        return _read_csv(text)
    except csv.Error as exc:
        raise ParseError(f"malformed CSV: {exc}", None) from exc


def _read_csv(text):
    reader = csv.DictReader(io.StringIO(text.replace("\0", "")))
    header = [h.strip() for h in (reader.fieldnames or [])]
    missing = [c for c in CSV_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"trajectory CSV lacks columns: {', '.join(missing)}")
    reader.fieldnames = header
    samples = []
    for row in reader:
        line = reader.line_num
        try:
            v = {c: float(row[c]) for c in CSV_COLUMNS}
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad number in row {line}", line) from exc
        if not all(math.isfinite(x) for x in v.values()):
            raise ParseError(f"non-finite value in row {line}", line)
        samples.append(
            TrajectorySample(
                t=v["t"],
                lat=v["lat"],
                lon=v["lon"],
                alt=v["alt"],
                rpy=(v["roll"], v["pitch"], v["yaw"]),
                velocity=(v["ve"], v["vn"], v["vu"]),
                acc=(v["ax"], v["ay"], v["az"]),
                omega=(v["wx"], v["wy"], v["wz"]),
            )
        )
    return _with_steps(samples)


def write_trajectory_csv(samples, dest):
    """Write samples in the generic CSV schema; floats round-trip exactly."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in samples:
        ve, vn, vu = s.velocity
        w.writerow(
            [repr(float(x)) for x in (s.t, s.lat, s.lon, s.alt, *s.rpy, vn, ve, vu, *s.acc, *s.omega)]
        )
    text = out.getvalue()
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)
    return text


def enu_track(samples, origin=None):
    """(n, 3) ENU positions relative to ``origin`` (default: first sample)."""
    origin = origin or samples[0].position
    return np.array(
        [frames.ecef_to_enu(frames.geodetic_to_ecef(*s.position), origin) for s in samples]
    )


def synth_imu_from_truth(samples, noise=None, rng=None, gyro_bias=(0, 0, 0), accel_bias=(0, 0, 0),
                         gravity=GRAVITY):
    """Body-frame IMU readings that reproduce the truth under the filter's motion model.

    Noise densities come from ``noise`` (a ``ProcessNoise``); constant biases
    are added on top.
    """
    if len(samples) < 3:
        raise ValueError("need at least three samples to difference")
    g = np.asarray(gravity, dtype=float)
    out = []
    for i, s in enumerate(samples):
        # the last sample repeats the final increment; nothing follows it
        j = min(i, len(samples) - 2)
        a, b = samples[j], samples[j + 1]
        dt = b.t - a.t
        if not dt > 0:
            raise OrderingError(f"non-increasing time at sample {j + 1}")
        Ra = a.R
        omega = so3.log_so3(Ra.T @ b.R) / dt
        acc_w = (np.asarray(b.velocity) - np.asarray(a.velocity)) / dt
        acc = Ra.T @ (acc_w - g)
        omega = omega + np.asarray(gyro_bias, dtype=float)
        acc = acc + np.asarray(accel_bias, dtype=float)
        if noise is not None and rng is not None:
            omega = omega + rng.normal(0.0, noise.gyro / math.sqrt(dt), 3)
            acc = acc + rng.normal(0.0, noise.accel / math.sqrt(dt), 3)
        out.append(replace(s, omega=tuple(omega), acc=tuple(acc)))
    return _with_steps(out)


def synthetic_trajectory(duration=60.0, rate=10.0, origin=DEFAULT_ORIGIN, speed=8.0, heading=0.3):
    """Built-in drive: straight legs joined by two gentle opposite turns.

    Positions are integrated from the velocity with the trapezoid rule, so the
    stream is exactly consistent with the filter's motion model.
    """
    n = int(round(duration * rate)) + 1
    t = np.arange(n) / rate
    yaw_rate = np.where((t >= 15) & (t < 25), 0.08, 0.0) + np.where((t >= 38) & (t < 48), -0.08, 0.0)
    dt = 1.0 / rate
    yaw = heading + np.concatenate([[0.0], np.cumsum(0.5 * (yaw_rate[1:] + yaw_rate[:-1]) * dt)])
    spd = speed + 1.5 * np.sin(2 * np.pi * t / duration)
    vel = np.column_stack([spd * np.cos(yaw), spd * np.sin(yaw), np.zeros(n)])
    enu = np.zeros((n, 3))
    enu[1:] = np.cumsum(0.5 * (vel[1:] + vel[:-1]) * dt, axis=0)
    samples = []
    for k in range(n):
        lat, lon, alt = frames.ecef_to_geodetic(frames.enu_to_ecef(enu[k], origin))
        samples.append(
            TrajectorySample(
                t=float(t[k]), lat=lat, lon=lon, alt=alt,
                rpy=(0.0, 0.0, float(yaw[k])), velocity=tuple(vel[k]),
            )
        )
    return synth_imu_from_truth(_with_steps(samples))
