# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (see _fallback.py for the contract)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos, atan2, ceil, floor, fabs

cnp.import_array()

cdef double SMALL_ANGLE = 1e-7
cdef double NEAR_PI_COS = -0.9
cdef double DEGENERACY = 1e-10


cdef void _exp(double v0, double v1, double v2, double[:, ::1] R) noexcept nogil:
    cdef double t2 = v0 * v0 + v1 * v1 + v2 * v2
    cdef double t = sqrt(t2)
    cdef double a, b
    if t < SMALL_ANGLE:
        a = 1.0 - t2 / 6.0
        b = 0.5 - t2 / 24.0
    else:
        a = sin(t) / t
        b = (1.0 - cos(t)) / t2
    # I + a K + b K^2, with K^2 = v v^T - t2 I
    R[0, 0] = 1.0 + b * (v0 * v0 - t2)
    R[1, 1] = 1.0 + b * (v1 * v1 - t2)
    R[2, 2] = 1.0 + b * (v2 * v2 - t2)
    R[0, 1] = -a * v2 + b * v0 * v1
    R[1, 0] = a * v2 + b * v0 * v1
    R[0, 2] = a * v1 + b * v0 * v2
    R[2, 0] = -a * v1 + b * v0 * v2
    R[1, 2] = -a * v0 + b * v1 * v2
    R[2, 1] = a * v0 + b * v1 * v2


def exp_so3(v):
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    out = np.empty((3, 3))
    _exp(vv[0], vv[1], vv[2], out)
    return out


cdef double _angle(double[:, :] R) noexcept nogil:
    cdef double w0 = R[2, 1] - R[1, 2]
    cdef double w1 = R[0, 2] - R[2, 0]
    cdef double w2 = R[1, 0] - R[0, 1]
    cdef double s = 0.5 * sqrt(w0 * w0 + w1 * w1 + w2 * w2)
    cdef double c = 0.5 * (R[0, 0] + R[1, 1] + R[2, 2] - 1.0)
    return atan2(s, c)


def rotation_angle(R):
    cdef double[:, :] m = np.asarray(R, dtype=np.float64)
    return _angle(m)


def log_so3(R):
    cdef double[:, :] m = np.asarray(R, dtype=np.float64)
    cdef double w0 = m[2, 1] - m[1, 2]
    cdef double w1 = m[0, 2] - m[2, 0]
    cdef double w2 = m[1, 0] - m[0, 1]
    cdef double s = 0.5 * sqrt(w0 * w0 + w1 * w1 + w2 * w2)
    cdef double c = 0.5 * (m[0, 0] + m[1, 1] + m[2, 2] - 1.0)
    cdef double t = atan2(s, c)
    cdef double k, best, n
    cdef double B[3][3]
    cdef double ax[3]
    cdef int i, j, imax
    out = np.empty(3)
    if t < SMALL_ANGLE:
        k = 0.5 * (1.0 + t * t / 6.0)
        out[0] = k * w0
        out[1] = k * w1
        out[2] = k * w2
        return out
    if c > NEAR_PI_COS:
        k = t / (2.0 * s)
        out[0] = k * w0
        out[1] = k * w1
        out[2] = k * w2
        return out
    for i in range(3):
        for j in range(3):
            B[i][j] = 0.5 * (m[i, j] + m[j, i]) / (1.0 - c)
        B[i][i] -= c / (1.0 - c)
    imax = 0
    best = B[0][0]
    for i in range(1, 3):
        if B[i][i] > best:
            best = B[i][i]
            imax = i
    n = 0.0
    for i in range(3):
        ax[i] = B[i][imax] / sqrt(best)
        n += ax[i] * ax[i]
    n = sqrt(n)
    if ax[0] * w0 + ax[1] * w1 + ax[2] * w2 < 0.0:
        n = -n
    for i in range(3):
        out[i] = t * ax[i] / n
    return out


cdef double _geodesic(double[:, :] A, double[:, :] B) noexcept nogil:
    cdef double M[3][3]
    cdef int i, j, k
    cdef double acc
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += A[k, i] * B[k, j]
            M[i][j] = acc
    cdef double w0 = M[2][1] - M[1][2]
    cdef double w1 = M[0][2] - M[2][0]
    cdef double w2 = M[1][0] - M[0][1]
    cdef double s = 0.5 * sqrt(w0 * w0 + w1 * w1 + w2 * w2)
    cdef double c = 0.5 * (M[0][0] + M[1][1] + M[2][2] - 1.0)
    return sqrt(2.0) * atan2(s, c)


def geodesic(R1, R2):
    cdef double[:, :] a = np.asarray(R1, dtype=np.float64)
    cdef double[:, :] b = np.asarray(R2, dtype=np.float64)
    return _geodesic(a, b)


cdef inline double _wrap(double x) noexcept nogil:
    return x - ceil(x - 0.5)


cdef inline double _clip1(double x) noexcept nogil:
    if x > 1.0:
        return 1.0
    if x < -1.0:
        return -1.0
    return x


def direction_cosines(phases, double d12, double d23, double d14, double d45,
                      double lam, double margin):
    cdef double[:, ::1] p = np.ascontiguousarray(phases, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0]
    ux_a = np.empty(n)
    uy_a = np.empty(n)
    ok_a = np.empty(n, dtype=np.int8)
    cdef double[::1] ux = ux_a
    cdef double[::1] uy = uy_a
    cdef signed char[::1] ok = ok_a
    cdef Py_ssize_t s
    cdef int ax, b, c
    cdef double dab, dbc, pab, pbc, u0, nab, nbc, u
    cdef bint good
    for s in range(n):
        good = True
        for ax in range(2):
            if ax == 0:
                b = 1
                c = 2
                dab = d12
                dbc = d23
            else:
                b = 3
                c = 4
                dab = d14
                dbc = d45
            pab = _wrap(p[s, 0] - p[s, b])
            pbc = _wrap(p[s, b] - p[s, c])
            u0 = lam * _wrap(pab - pbc) / (dab - dbc)
            if fabs(u0) > 1.0 + margin:
                good = False
            nab = floor(dab * u0 / lam - pab + 0.5)
            nbc = floor(dbc * u0 / lam - pbc + 0.5)
            u = _clip1(lam * ((pab + nab) + (pbc + nbc)) / (dab + dbc))
            if ax == 0:
                ux[s] = u
            else:
                uy[s] = u
        ok[s] = 1 if good else 0
    return ux_a, uy_a, ok_a


cdef bint _inv3(double[:, ::1] A, double[:, ::1] out) noexcept nogil:
    cdef double det = (A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
                       - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
                       + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))
    if det == 0.0:
        return False
    cdef double r = 1.0 / det
    out[0, 0] = (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1]) * r
    out[0, 1] = (A[0, 2] * A[2, 1] - A[0, 1] * A[2, 2]) * r
    out[0, 2] = (A[0, 1] * A[1, 2] - A[0, 2] * A[1, 1]) * r
    out[1, 0] = (A[1, 2] * A[2, 0] - A[1, 0] * A[2, 2]) * r
    out[1, 1] = (A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]) * r
    out[1, 2] = (A[0, 2] * A[1, 0] - A[0, 0] * A[1, 2]) * r
    out[2, 0] = (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]) * r
    out[2, 1] = (A[0, 1] * A[2, 0] - A[0, 0] * A[2, 1]) * r
    out[2, 2] = (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]) * r
    return True


cdef double _det3(double[:, ::1] A) noexcept nogil:
    return (A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
            - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
            + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))


cdef bint _polar(double[:, ::1] X, double[:, ::1] Y, double[:, ::1] Xi) noexcept nogil:
    # scaled Newton iteration for the orthogonal polar factor, X overwritten
    cdef int it, i, j
    cdef double nx, ni, g, diff, v
    for it in range(60):
        if not _inv3(X, Xi):
            return False
        nx = 0.0
        ni = 0.0
        for i in range(3):
            for j in range(3):
                nx += X[i, j] * X[i, j]
                ni += Xi[i, j] * Xi[i, j]
        g = sqrt(sqrt(ni / nx))
        diff = 0.0
        for i in range(3):
            for j in range(3):
                v = 0.5 * (g * X[i, j] + Xi[j, i] / g)
                diff += (v - X[i, j]) * (v - X[i, j])
                Y[i, j] = v
        for i in range(3):
            for j in range(3):
                X[i, j] = Y[i, j]
        if diff < 1e-30:
            break
    return True


def fit_attitude(H, ux, uy, double dx, double dy, double lam):
    cdef double[:, ::1] h = np.ascontiguousarray(H, dtype=np.float64)
    cdef double[::1] vx = np.ascontiguousarray(ux, dtype=np.float64)
    cdef double[::1] vy = np.ascontiguousarray(uy, dtype=np.float64)
    cdef Py_ssize_t k = h.shape[0]
    cdef Py_ssize_t s
    cdef int i, j
    R_a = np.eye(3)
    if k < 3:
        return R_a, 0.0, 1
    A_a = np.zeros((3, 3))
    Ai_a = np.empty((3, 3))
    Y_a = np.empty((3, 3))
    cdef double[:, ::1] A = A_a
    cdef double[:, ::1] Ai = Ai_a
    cdef double[:, ::1] Y = Y_a
    cdef double[:, ::1] R = R_a
    cdef double gx[3]
    cdef double gy[3]
    cdef double bx[3]
    cdef double by[3]
    for i in range(3):
        gx[i] = 0.0
        gy[i] = 0.0
    for s in range(k):
        for i in range(3):
            gx[i] += h[s, i] * vx[s]
            gy[i] += h[s, i] * vy[s]
            for j in range(3):
                A[i, j] += h[s, i] * h[s, j]
    cdef double tr = (A[0, 0] + A[1, 1] + A[2, 2]) / 3.0
    if tr <= 0.0 or _det3(A) / (tr * tr * tr) < DEGENERACY:
        return np.eye(3), 0.0, 1
    if not _inv3(A, Ai):
        return np.eye(3), 0.0, 1
    for i in range(3):
        bx[i] = Ai[i, 0] * gx[0] + Ai[i, 1] * gx[1] + Ai[i, 2] * gx[2]
        by[i] = Ai[i, 0] * gy[0] + Ai[i, 1] * gy[1] + Ai[i, 2] * gy[2]
    for i in range(3):
        R[i, 0] = bx[i]
        R[i, 1] = by[i]
    R[0, 2] = bx[1] * by[2] - bx[2] * by[1]
    R[1, 2] = bx[2] * by[0] - bx[0] * by[2]
    R[2, 2] = bx[0] * by[1] - bx[1] * by[0]
    if _det3(R) <= 0.0:
        return np.eye(3), 0.0, 1
    if not _polar(R, Y, Ai):
        return np.eye(3), 0.0, 1
    cdef double acc = 0.0
    cdef double ex, ey
    for s in range(k):
        ex = (vx[s] - (h[s, 0] * R[0, 0] + h[s, 1] * R[1, 0] + h[s, 2] * R[2, 0])) * (dx / lam)
        ey = (vy[s] - (h[s, 0] * R[0, 1] + h[s, 1] * R[1, 1] + h[s, 2] * R[2, 1])) * (dy / lam)
        acc += ex * ex + ey * ey
    return R_a, sqrt(acc / (2 * k)), 0
