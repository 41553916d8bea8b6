"""Array attitude from carrier phases and the LOS matrix.

Each axis of the array carries three collinear antennas with unequal
spacings ``d_ab != d_bc``. The difference of the two single-difference phases
behaves like a virtual baseline of length ``|d_ab - d_bc| <= lambda/2`` and is
therefore unambiguous; it gives a coarse direction cosine that fixes the
integer ambiguities of the two real baselines, whose combined length then
gives the precise value. Stacking the direction cosines of all satellites
yields ``H @ R[:, 0] = u_x`` and ``H @ R[:, 1] = u_y``, solved by least
squares and projected onto SO(3).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from arraynav import _core
from arraynav.errors import AmbiguityError, DegenerateGeometryError

# tolerance on |u0| beyond 1 before a satellite is declared unresolvable
AMBIGUITY_MARGIN = 0.1
MIN_SATELLITES = 3


@dataclass
class AttitudeSolution:
    R: np.ndarray
    residual: float
    used: list


def direction_cosine_per_axis(phi_a, phi_b, phi_c, d_ab, d_bc, wavelength, margin=AMBIGUITY_MARGIN):
    """Direction cosine of the LOS along one three-antenna axis.

    Phases are in cycles; the result is the cosine of the angle between the
    LOS and the axis (antenna a towards c).
    """
    if abs(_coarse(phi_a, phi_b, phi_c, d_ab, d_bc, wavelength)) > 1 + margin:
        raise AmbiguityError("coarse direction cosine outside [-1, 1]; ambiguity unresolvable")
    p = np.zeros((1, 5))
    p[0, 0], p[0, 1], p[0, 2] = phi_a, phi_b, phi_c
    # x-axis branch of the kernel; the y inputs are a dummy copy
    u, _, _ = _core.direction_cosines(p, d_ab, d_bc, d_ab, d_bc, wavelength, margin)
    return float(u[0])


def _coarse(pa, pb, pc, dab, dbc, lam):
    def w(x):
        return x - np.ceil(x - 0.5)

    return lam * w(w(pa - pb) - w(pb - pc)) / (dab - dbc)


def direction_cosines(phases, geometry, margin=AMBIGUITY_MARGIN):
    """``(u_x, u_y, ok)`` for every row of an (n, 5) cycle array."""
    g = geometry
    return _core.direction_cosines(
        np.asarray(phases, dtype=float), g.d12, g.d23, g.d14, g.d45, g.wavelength, margin
    )


def att_from_phase(phases, geometry, H, margin=AMBIGUITY_MARGIN):
    phases = np.atleast_2d(np.asarray(phases, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if phases.shape[0] != H.shape[0]:
        raise ValueError("phase rows and LOS rows differ in count")
    if phases.shape[0] < MIN_SATELLITES:
        raise DegenerateGeometryError(f"need at least {MIN_SATELLITES} satellites")
    ux, uy, ok = direction_cosines(phases, geometry, margin)
    used = np.flatnonzero(ok)
    if used.size < MIN_SATELLITES:
        raise DegenerateGeometryError("fewer than 3 satellites with resolvable ambiguities")
    R, res, status = _core.fit_attitude(
        H[used], ux[used], uy[used], geometry.x_span, geometry.y_span, geometry.wavelength
    )
    if status:
        raise DegenerateGeometryError("LOS matrix is rank deficient")
    return AttitudeSolution(R=R, residual=res, used=used.tolist())


class SubsetSolver:
    """Attitude for arbitrary satellite subsets of one epoch.

    Direction cosines depend only on each satellite's own phases, so they
    are computed once; every subset then costs a single small fit. ``calls``
    counts fits, the unit of work compared between detectors.
    """

    def __init__(self, phases, geometry, H, margin=AMBIGUITY_MARGIN):
        self.H = np.ascontiguousarray(H, dtype=float)
        self.geometry = geometry
        self.ux, self.uy, ok = direction_cosines(phases, geometry, margin)
        self.ok = ok.astype(bool)
        self.calls = 0

    def usable(self, subset):
        return [i for i in subset if self.ok[i]]

    def solve(self, subset, strict=True):
        """Rotation for ``subset`` or None when it cannot be solved.

        With ``strict`` any member whose ambiguity is unresolvable makes the
        subset unsolvable; otherwise such members are dropped.
        """
        self.calls += 1
        idx = self.usable(subset)
        if (strict and len(idx) < len(subset)) or len(idx) < MIN_SATELLITES:
            return None
        g = self.geometry
        R, _, status = _core.fit_attitude(
            self.H[idx], self.ux[idx], self.uy[idx], g.x_span, g.y_span, g.wavelength
        )
        return None if status else R
