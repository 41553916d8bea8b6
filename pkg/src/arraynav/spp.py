"""Single point positioning from pseudoranges (Gauss-Newton, unweighted)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from arraynav.errors import ConvergenceError, IllConditionedError, UnderdeterminedError

MAX_ITER = 20
STEP_TOL = 1e-4
MAX_COND = 1e8


@dataclass
class SppSolution:
    position: np.ndarray
    clock_bias: float
    residuals: np.ndarray
    iterations: int
    covariance: np.ndarray  # (4, 4) cofactor matrix (G^T G)^-1


def spp_solve(pseudoranges, sat_positions, initial, clock0=0.0):
    """Solve ECEF position and receiver clock bias (both metres)."""
    rho = np.asarray(pseudoranges, dtype=float)
    sats = np.atleast_2d(np.asarray(sat_positions, dtype=float))
    n = rho.size
    if n < 4:
        raise UnderdeterminedError(f"{n} satellites cannot fix position and clock")
    x = np.array([*np.asarray(initial, dtype=float), clock0])
    for it in range(1, MAX_ITER + 1):
        d = x[:3] - sats
        r = np.linalg.norm(d, axis=1)
        G = np.column_stack([d / r[:, None], np.ones(n)])
        if np.linalg.cond(G) > MAX_COND:
            raise IllConditionedError("satellite geometry is ill-conditioned")
        resid = rho - (r + x[3])
        dx, *_ = np.linalg.lstsq(G, resid, rcond=None)
        x = x + dx
        if np.linalg.norm(dx) < STEP_TOL:
            d = x[:3] - sats
            r = np.linalg.norm(d, axis=1)
            G = np.column_stack([d / r[:, None], np.ones(n)])
            return SppSolution(
                position=x[:3],
                clock_bias=float(x[3]),
                residuals=rho - (r + x[3]),
                iterations=it,
                covariance=np.linalg.inv(G.T @ G),
            )
    raise ConvergenceError("SPP did not converge", last=x)


def solve_array(pseudoranges, sat_positions, initial, clock0=0.0):
    """Independent solutions for each antenna column of an (n, 5) array."""
    pr = np.asarray(pseudoranges, dtype=float)
    return [spp_solve(pr[:, r], sat_positions, initial, clock0) for r in range(pr.shape[1])]
