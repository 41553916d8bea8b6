"""Rotation-group helpers: exp/log maps, geodesic distance, roll-pitch-yaw.

Rotations are plain ``(3, 3)`` float arrays and rotation vectors are
``(3,)`` arrays. Euler angles follow the intrinsic z-y-x convention,
``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``, which is also the KITTI OXTS
convention (body x forward, y left, z up).
"""

import math

import numpy as np

from arraynav import _core
from arraynav.errors import InvalidRotationError

ORTHO_TOL = 1e-6
GIMBAL_TOL = 1e-9


def skew(v):
    v = np.asarray(v, dtype=float)
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def vee(K):
    return np.array([K[2, 1], K[0, 2], K[1, 0]])


def is_rotation(R, tol=ORTHO_TOL):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    if np.abs(R.T @ R - np.eye(3)).max() > tol:
        return False
    return abs(np.linalg.det(R) - 1.0) <= tol


def check_rotation(R, tol=ORTHO_TOL):
    if not is_rotation(R, tol):
        raise InvalidRotationError("matrix is not a proper rotation")
    return np.asarray(R, dtype=float)


def exp_so3(v):
    """Rodrigues formula. Total for any finite rotation vector."""
    return _core.exp_so3(np.asarray(v, dtype=float))


def log_so3(R):
    """Rotation vector with norm in ``[0, pi]``."""
    return _core.log_so3(check_rotation(R))


def angle(R):
    return _core.rotation_angle(check_rotation(R))


def geodesic_distance(R1, R2):
    """Frobenius norm of ``log(R1.T @ R2)``, i.e. sqrt(2) times the angle."""
    return _core.geodesic(check_rotation(R1), check_rotation(R2))


def project(M):
    """Nearest rotation in the Frobenius sense (polar factor with det +1)."""
    U, _, Vt = np.linalg.svd(np.asarray(M, dtype=float))
    return U @ np.diag([1.0, 1.0, np.linalg.det(U @ Vt)]) @ Vt


def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rpy_to_so3(rpy):
    roll, pitch, yaw = (float(x) for x in rpy)
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def so3_to_rpy(R, with_flag=False):
    """Return ``array([roll, pitch, yaw])``.

    At gimbal lock (|pitch| within ``GIMBAL_TOL`` of pi/2) yaw is set to 0 and
    the whole heading is folded into roll; ``with_flag=True`` additionally
    returns whether that happened.
    """
    R = check_rotation(R)
    pitch = math.atan2(-R[2, 0], math.hypot(R[0, 0], R[1, 0]))
    locked = abs(abs(pitch) - math.pi / 2) < GIMBAL_TOL
    if locked:
        yaw = 0.0
        roll = math.atan2(-R[1, 2], R[1, 1])
    else:
        roll = math.atan2(R[2, 1], R[2, 2])
        yaw = math.atan2(R[1, 0], R[0, 0])
    out = np.array([_wrap_pi(roll), pitch, _wrap_pi(yaw)])
    return (out, locked) if with_flag else out


def _wrap_pi(a):
    # (-pi, pi]
    return a if a > -math.pi else a + 2 * math.pi


def wrap_angle(a):
    """Wrap radians to ``(-pi, pi]``; works elementwise on arrays."""
    a = np.asarray(a, dtype=float)
    w = a - 2 * np.pi * np.ceil((a - np.pi) / (2 * np.pi))
    return w if w.ndim else float(w)


def random_rotation(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )
