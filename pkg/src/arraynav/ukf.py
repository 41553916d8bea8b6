"""Unscented Kalman filter on SO(3) x R^12 for GNSS-array / IMU fusion.

The state is attitude ``R`` (body to ENU), position ``P`` of antenna 1,
velocity ``V`` and the gyro and accelerometer biases. Uncertainty lives in
the 15-dimensional tangent space ``[dtheta, dP, dV, db_g, db_a]``; sigma
points are mapped onto the manifold with ``retract`` (right perturbation of
``R``, plain addition elsewhere) and pulled back with ``inverse_retract``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from arraynav import so3
from arraynav.errors import InvalidStepError, SingularUpdateError

DIM = 15
NOISE_DIM = 12
GRAVITY = (0.0, 0.0, -9.80665)
PSD_TOL = 1e-9
GIMBAL_LIMIT = math.radians(85.0)
MIN_ATTITUDE_VAR = 1e-4


@dataclass
class UkfState:
    R: np.ndarray
    P: np.ndarray
    V: np.ndarray
    b_g: np.ndarray = field(default_factory=lambda: np.zeros(3))
    b_a: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=float)
        for name in ("P", "V", "b_g", "b_a"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))

    def copy(self):
        return UkfState(self.R.copy(), self.P.copy(), self.V.copy(), self.b_g.copy(), self.b_a.copy())

    def check(self):
        so3.check_rotation(self.R)
        if not all(np.all(np.isfinite(v)) for v in (self.P, self.V, self.b_g, self.b_a)):
            raise ValueError("non-finite filter state")


@dataclass(frozen=True)
class ImuSample:
    omega: np.ndarray
    acc: np.ndarray
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidStepError(f"IMU step must be positive, got {self.dt}")


@dataclass(frozen=True)
class ProcessNoise:
    """White-noise densities (per sqrt(Hz)) of the IMU and its bias walks."""

    gyro: float = 0.005
    accel: float = 0.05
    gyro_walk: float = 1e-5
    accel_walk: float = 1e-4
    gravity: tuple = GRAVITY

    def __post_init__(self):
        if min(self.gyro, self.accel, self.gyro_walk, self.accel_walk) < 0:
            raise ValueError("noise densities must be non-negative")

    def covariance(self, dt):
        """Covariance of the 12 discrete noise inputs over one step."""
        s = np.repeat([self.gyro, self.accel, self.gyro_walk, self.accel_walk], 3)
        return np.diag(s**2 / dt)


@dataclass(frozen=True)
class UnscentedParams:
    alpha: float = 1e-3
    beta: float = 2.0
    kappa: float = 0.0

    def weights(self, n):
        lam = self.alpha**2 * (n + self.kappa) - n
        wm = np.full(2 * n + 1, 0.5 / (n + lam))
        wc = wm.copy()
        wm[0] = lam / (n + lam)
        wc[0] = wm[0] + 1.0 - self.alpha**2 + self.beta
        return math.sqrt(n + lam), wm, wc


@dataclass
class ArrayMeasurement:
    """Array-derived observation.

    ``rpy`` may be None (no attitude fix) and ``positions`` is (5, 3) ENU.
    ``position_cov`` holds one 3x3 covariance per antenna; ``er_best`` is the
    detector's geodesic error, which sets the attitude noise.
    """

    rpy: np.ndarray | None
    positions: np.ndarray | None
    er_best: float = 0.0
    position_cov: np.ndarray | None = None

    def __post_init__(self):
        if self.positions is not None:
            self.positions = np.asarray(self.positions, dtype=float)
            if self.positions.shape != (5, 3):
                raise ValueError("expected five antenna positions")


def retract(x, xi):
    xi = np.asarray(xi, dtype=float)
    return UkfState(
        x.R @ so3.exp_so3(xi[0:3]),
        x.P + xi[3:6],
        x.V + xi[6:9],
        x.b_g + xi[9:12],
        x.b_a + xi[12:15],
    )


def inverse_retract(x, y):
    """Tangent vector taking ``x`` to ``y``."""
    return np.concatenate(
        [so3.log_so3(x.R.T @ y.R), y.P - x.P, y.V - x.V, y.b_g - x.b_g, y.b_a - x.b_a]
    )


def _motion(x, u, g, w=None):
    """One IMU step; ``w`` are the 12 noise inputs (gyro, accel, two walks)."""
    w = np.zeros(NOISE_DIM) if w is None else w
    dt = u.dt
    omega = np.asarray(u.omega, dtype=float) - x.b_g + w[0:3]
    acc = x.R @ (np.asarray(u.acc, dtype=float) - x.b_a + w[3:6]) + g
    return UkfState(
        x.R @ so3.exp_so3(omega * dt),
        x.P + x.V * dt + 0.5 * acc * dt * dt,
        x.V + acc * dt,
        x.b_g + w[6:9] * dt,
        x.b_a + w[9:12] * dt,
    )


def _sym_psd(S, what):
    S = 0.5 * (S + S.T)
    vals, vecs = np.linalg.eigh(S)
    if vals.min() < -PSD_TOL * max(1.0, vals.max()):
        # only rounding-level negativity is tolerated
        raise SingularUpdateError(f"{what} covariance lost positive semi-definiteness")
    if vals.min() < 0:
        S = (vecs * np.maximum(vals, 0.0)) @ vecs.T
        S = 0.5 * (S + S.T)
    return S


def _sqrt(S):
    """Symmetric square root; tolerates semi-definite input."""
    vals, vecs = np.linalg.eigh(0.5 * (S + S.T))
    return vecs * np.sqrt(np.maximum(vals, 0.0))


def propagate(x, cov, u, q=None, params=None):
    if not 0 < u.dt <= 1.0:
        raise InvalidStepError(f"IMU step {u.dt} s outside (0, 1]")
    q = q or ProcessNoise()
    params = params or UnscentedParams()
    g = np.asarray(q.gravity, dtype=float)
    mean = _motion(x, u, g)
    mean.R = so3.project(mean.R)

    n = DIM + NOISE_DIM
    aug = np.zeros((n, n))
    aug[:DIM, :DIM] = cov
    aug[DIM:, DIM:] = q.covariance(u.dt)
    scale, wm, wc = params.weights(n)
    L = scale * _sqrt(aug)
    xis = np.zeros((2 * n + 1, DIM))
    for j in range(n):
        for k, sgn in ((1 + j, 1.0), (1 + n + j, -1.0)):
            col = sgn * L[:, j]
            xis[k] = inverse_retract(mean, _motion(retract(x, col[:DIM]), u, g, col[DIM:]))
    xbar = wm @ xis
    d = xis - xbar
    new_cov = _sym_psd((d * wc[:, None]).T @ d, "propagated")
    return mean, new_cov


def antenna_positions(x, geometry):
    """ENU positions of the five antennas for state ``x``."""
    ex, ey = x.R[:, 0], x.R[:, 1]
    g = geometry
    return np.array(
        [
            x.P,
            x.P + g.d12 * ex,
            x.P + (g.d12 + g.d23) * ex,
            x.P + g.d14 * ey,
            x.P + (g.d14 + g.d45) * ey,
        ]
    )


def predict_measurement(x, geometry):
    """(rpy, positions) predicted from the state."""
    return so3.so3_to_rpy(x.R), antenna_positions(x, geometry)


def measurement_noise(z):
    """Block-diagonal noise for ``[rpy, P_1..P_5]``; None blocks are absent."""
    blocks = []
    if z.rpy is not None:
        blocks.append(max(z.er_best**2, MIN_ATTITUDE_VAR) * np.eye(3))
    if z.positions is not None:
        pc = z.position_cov if z.position_cov is not None else np.tile(np.eye(3), (5, 1, 1))
        blocks.extend(np.asarray(pc, dtype=float))
    size = 3 * len(blocks)
    N = np.zeros((size, size))
    for i, b in enumerate(blocks):
        N[3 * i : 3 * i + 3, 3 * i : 3 * i + 3] = b
    return N


def _h(x, geometry, use_att, use_pos):
    rpy, pos = predict_measurement(x, geometry)
    parts = []
    if use_att:
        parts.append(rpy)
    if use_pos:
        parts.append(pos.ravel())
    return np.concatenate(parts)


def _residual(a, b, n_ang):
    r = np.asarray(a, dtype=float) - b
    if n_ang:
        r[:n_ang] = so3.wrap_angle(r[:n_ang])
    return r


def update(x, cov, z, geometry, noise=None, params=None):
    """Fold an array measurement into the state.

    ``noise`` overrides ``measurement_noise(z)``. Rows with infinite noise are
    treated as missing. Near gimbal lock the attitude block is skipped.
    """
    params = params or UnscentedParams()
    use_att = z.rpy is not None and abs(so3.so3_to_rpy(x.R)[1]) <= GIMBAL_LIMIT
    use_pos = z.positions is not None
    N = measurement_noise(z) if noise is None else np.asarray(noise, dtype=float)
    if z.rpy is not None and not use_att:
        N = N[3:, 3:]
    if not (use_att or use_pos):
        return x.copy(), cov.copy()
    zvec = np.concatenate(
        ([np.asarray(z.rpy, dtype=float)] if use_att else []) + ([z.positions.ravel()] if use_pos else [])
    )
    keep = np.isfinite(np.diag(N))
    if not keep.any():
        return x.copy(), cov.copy()
    n_ang = 3 if use_att else 0

    scale, wm, wc = params.weights(DIM)
    L = scale * _sqrt(cov)
    xis = np.zeros((2 * DIM + 1, DIM))
    xis[1 : DIM + 1] = L.T
    xis[DIM + 1 :] = -L.T
    z0 = _h(x, geometry, use_att, use_pos)
    dz = np.array([_residual(_h(retract(x, xi), geometry, use_att, use_pos), z0, n_ang) for xi in xis])
    dz_bar = wm @ dz
    dz = dz - dz_bar

    dz, N, zvec, z0 = dz[:, keep], N[np.ix_(keep, keep)], zvec[keep], z0[keep]
    n_ang = int(keep[:n_ang].sum())
    S = (dz * wc[:, None]).T @ dz + N
    Pxz = (xis * wc[:, None]).T @ dz
    try:
        S_inv = np.linalg.inv(S)
    except np.linalg.LinAlgError as exc:
        raise SingularUpdateError("innovation covariance is singular") from exc
    if not np.all(np.isfinite(S_inv)):
        raise SingularUpdateError("innovation covariance is singular")
    K = Pxz @ S_inv
    # residual against the prediction at the mean state, as the output model
    # defines it; the sigma spread only shapes the gain
    innov = _residual(zvec, z0, n_ang)
    x_new = retract(x, K @ innov)
    x_new.R = so3.project(x_new.R)
    # Joseph form with the statistically linearised observation matrix
    try:
        H = Pxz.T @ np.linalg.pinv(cov)
    except np.linalg.LinAlgError as exc:
        raise SingularUpdateError("state covariance pseudo-inverse failed") from exc
    A = np.eye(DIM) - K @ H
    new_cov = _sym_psd(A @ cov @ A.T + K @ N @ K.T, "updated")
    return x_new, new_cov


def initial_covariance(att=0.05, pos=5.0, vel=0.5, gyro_bias=0.01, accel_bias=0.1):
    return np.diag(np.repeat([att, pos, vel, gyro_bias, accel_bias], 3) ** 2)


class Ukf:
    """Stateful wrapper: ``propagate`` with IMU samples, ``update`` with fixes."""

    def __init__(self, x0, cov0=None, geometry=None, noise=None, params=None):
        from arraynav.geometry import ArrayGeometry

        self.x = x0.copy()
        self.cov = initial_covariance() if cov0 is None else np.array(cov0, dtype=float)
        self.geometry = geometry or ArrayGeometry()
        self.noise = noise or ProcessNoise()
        self.params = params or UnscentedParams()

    def propagate(self, u):
        self.x, self.cov = propagate(self.x, self.cov, u, self.noise, self.params)
        return self.x

    def update(self, z, noise=None):
        self.x, self.cov = update(self.x, self.cov, z, self.geometry, noise, self.params)
        return self.x
