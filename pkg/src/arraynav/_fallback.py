"""Pure-numpy versions of the hot kernels.

Signatures mirror ``_kernels.pyx`` exactly; ``arraynav._core`` picks one of
the two at import time. Nothing here validates its inputs.
"""

import math

import numpy as np

SMALL_ANGLE = 1e-7
# below this cosine the log uses the symmetric part for the axis
NEAR_PI_COS = -0.9
DEGENERACY = 1e-10


def _skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def exp_so3(v):
    v = np.asarray(v, dtype=float)
    t2 = float(v @ v)
    t = math.sqrt(t2)
    if t < SMALL_ANGLE:
        a = 1.0 - t2 / 6.0
        b = 0.5 - t2 / 24.0
    else:
        a = math.sin(t) / t
        b = (1.0 - math.cos(t)) / t2
    K = _skew(v)
    return np.eye(3) + a * K + b * (K @ K)


def rotation_angle(R):
    s = 0.5 * math.sqrt(
        (R[2, 1] - R[1, 2]) ** 2 + (R[0, 2] - R[2, 0]) ** 2 + (R[1, 0] - R[0, 1]) ** 2
    )
    c = 0.5 * (R[0, 0] + R[1, 1] + R[2, 2] - 1.0)
    return math.atan2(s, c)


def log_so3(R):
    R = np.asarray(R, dtype=float)
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    s = 0.5 * math.sqrt(float(w @ w))
    c = 0.5 * (R[0, 0] + R[1, 1] + R[2, 2] - 1.0)
    t = math.atan2(s, c)
    if t < SMALL_ANGLE:
        return 0.5 * (1.0 + t * t / 6.0) * w
    if c > NEAR_PI_COS:
        return (t / (2.0 * s)) * w
    S = 0.5 * (R + R.T)
    B = (S - c * np.eye(3)) / (1.0 - c)
    i = int(np.argmax(np.diag(B)))
    axis = B[:, i] / math.sqrt(B[i, i])
    axis /= np.linalg.norm(axis)
    if axis @ w < 0.0:
        axis = -axis
    return t * axis


def geodesic(R1, R2):
    return math.sqrt(2.0) * rotation_angle(np.asarray(R1).T @ np.asarray(R2))


def _wrap(x):
    return x - np.ceil(x - 0.5)


def _axis_cosines(pa, pb, pc, dab, dbc, lam, margin):
    dab_phi = _wrap(pa - pb)
    dbc_phi = _wrap(pb - pc)
    u0 = lam * _wrap(dab_phi - dbc_phi) / (dab - dbc)
    ok = np.abs(u0) <= 1.0 + margin
    nab = np.floor(dab * u0 / lam - dab_phi + 0.5)
    nbc = np.floor(dbc * u0 / lam - dbc_phi + 0.5)
    u = lam * ((dab_phi + nab) + (dbc_phi + nbc)) / (dab + dbc)
    return np.clip(u, -1.0, 1.0), ok


def direction_cosines(phases, d12, d23, d14, d45, lam, margin):
    p = np.asarray(phases, dtype=float)
    ux, okx = _axis_cosines(p[:, 0], p[:, 1], p[:, 2], d12, d23, lam, margin)
    uy, oky = _axis_cosines(p[:, 0], p[:, 3], p[:, 4], d14, d45, lam, margin)
    return ux, uy, (okx & oky).astype(np.int8)


def fit_attitude(H, ux, uy, dx, dy, lam):
    """Least-squares direction vectors projected onto SO(3).

    Returns ``(R, residual_cycles, status)``; status 1 flags a rank-deficient
    LOS matrix or collinear direction estimates.
    """
    H = np.asarray(H, dtype=float)
    if H.shape[0] < 3:
        return np.eye(3), 0.0, 1
    A = H.T @ H
    tr = np.trace(A) / 3.0
    if tr <= 0.0 or np.linalg.det(A) / tr**3 < DEGENERACY:
        return np.eye(3), 0.0, 1
    bx = np.linalg.solve(A, H.T @ ux)
    by = np.linalg.solve(A, H.T @ uy)
    M = np.column_stack([bx, by, np.cross(bx, by)])
    if np.linalg.det(M) <= 0.0:
        return np.eye(3), 0.0, 1
    U, _, Vt = np.linalg.svd(M)
    D = np.diag([1.0, 1.0, np.linalg.det(U @ Vt)])
    R = U @ D @ Vt
    rx = (ux - H @ R[:, 0]) * (dx / lam)
    ry = (uy - H @ R[:, 1]) * (dy / lam)
    res = math.sqrt((float(rx @ rx) + float(ry @ ry)) / (2 * H.shape[0]))
    return R, res, 0
