"""Multipath detection by attitude consistency.

``ransac_detect`` hypothesises clean sets from random minimal satellite
subsets, grows each by the satellites whose addition leaves the attitude
(nearly) unchanged, and keeps the consensus set whose attitude is closest to
a reference attitude. ``dbscan_detect`` is the exhaustive baseline that
scores every subset above a minimum size and clusters the scores.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.cluster import DBSCAN

from arraynav import _core
from arraynav.attitude import SubsetSolver
from arraynav.errors import CombinatorialBlowupError, InsufficientSatellitesError

ITERATION_CAP = 10000


@dataclass
class DetectorConfig:
    eps_inlier: float = 0.02
    n_min: int = 4
    m: int = 4
    p: float = 0.99
    eta: float = 0.3
    n_iter: int | None = None
    n_smin: int = 4
    dbscan_eps: float | None = None
    dbscan_min_pts: int = 3
    max_subsets: int = 20000

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")
        if not 0 <= self.eta < 1:
            raise ValueError("eta must lie in [0, 1)")
        if self.m < 3:
            raise ValueError("m must be at least 3")
        if self.n_min < self.m:
            raise ValueError("n_min must be at least m")

    @property
    def iterations(self):
        return self.n_iter if self.n_iter is not None else n_iterations(self.p, self.eta, self.m)


@dataclass
class DetectionResult:
    gamma: np.ndarray
    s_best: list
    R_best: np.ndarray | None
    er_best: float
    solves: int = 0
    hypothesis_solves: int = 0
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        free = set(self.s_best)
        assert all((g == 0) == (i in free) for i, g in enumerate(self.gamma))


@dataclass
class BenchmarkMetrics:
    success_rate: float
    false_negative_rate: float
    false_positive_rate: float
    misclassification_rate: float
    baseline_mae: float
    epochs: int = 0
    fn_undefined: bool = False
    fp_undefined: bool = False


def n_iterations(p, eta, m, cap=ITERATION_CAP):
    """RANSAC draw count for success probability ``p`` at outlier ratio ``eta``."""
    good = (1.0 - eta) ** m
    if good >= 1.0:
        return 1
    if good <= 0.0 or p >= 1.0:
        return cap
    n = math.log(1.0 - p) / math.log(1.0 - good)
    return int(min(max(math.ceil(n), 1), cap))


def _gamma(n, s_best):
    g = np.ones(n, dtype=int)
    g[list(s_best)] = 0
    return g


class _Memo:
    def __init__(self, solver):
        self.solver = solver
        self.cache = {}

    def __call__(self, subset):
        key = frozenset(subset)
        if key not in self.cache:
            self.cache[key] = self.solver.solve(sorted(key))
        return self.cache[key]


def _dist(R1, R2):
    return _core.geodesic(R1, R2)


def ransac_detect(epoch, geometry, R_ref, cfg=None, rng=None):
    cfg = cfg or DetectorConfig()
    rng = rng if rng is not None else np.random.default_rng()
    n = epoch.n_sats
    if n < cfg.m:
        raise InsufficientSatellitesError(f"{n} satellites, need at least {cfg.m}")
    solver = SubsetSolver(epoch.phase, geometry, epoch.los)
    solve = _Memo(solver)
    everyone = list(range(n))

    # the initial all-satellite fit drops unresolvable satellites, as a
    # plain attitude solve would; they start out flagged
    R_best = solver.solve(everyone, strict=False)
    s_best = solver.usable(everyone) if R_best is not None else everyone
    er_best = _dist(R_ref, R_best) if R_best is not None else math.inf
    init_calls = solver.calls

    n_iter = cfg.iterations
    n_combos = math.comb(n, cfg.m)
    seen = set()
    hyp = 0
    done = 0
    for _ in range(n_iter):
        if len(seen) >= n_combos:
            break
        while True:
            seed = tuple(sorted(rng.choice(n, cfg.m, replace=False).tolist()))
            if seed not in seen:
                break
        seen.add(seed)
        done += 1
        before = solver.calls
        R_k = solve(seed)
        if R_k is None:
            hyp += solver.calls - before
            continue
        inliers = list(seed)
        for sv in everyone:
            if sv in seed:
                continue
            R_sv = solve(seed + (sv,))
            if R_sv is not None and _dist(R_k, R_sv) < cfg.eps_inlier:
                inliers.append(sv)
        hyp += solver.calls - before
        if len(inliers) >= cfg.n_min:
            R_fit = solve(inliers)
            if R_fit is None:
                continue
            er = _dist(R_ref, R_fit)
            if er < er_best:
                R_best, s_best, er_best = R_fit, sorted(inliers), er
    return DetectionResult(
        gamma=_gamma(n, s_best),
        s_best=list(s_best),
        R_best=R_best,
        er_best=er_best,
        solves=solver.calls,
        hypothesis_solves=hyp,
        iterations=done,
        extra={"init_solves": init_calls},
    )


def subset_count(n, n_smin):
    return sum(math.comb(n, k) for k in range(n_smin, n + 1))


def dbscan_detect(epoch, geometry, R_ref, cfg=None):
    cfg = cfg or DetectorConfig()
    n = epoch.n_sats
    if n < cfg.n_smin:
        raise InsufficientSatellitesError(f"{n} satellites, need at least {cfg.n_smin}")
    total = subset_count(n, cfg.n_smin)
    if total > cfg.max_subsets:
        raise CombinatorialBlowupError(
            f"{total} subsets of {n} satellites exceed the limit of {cfg.max_subsets}"
        )
    solver = SubsetSolver(epoch.phase, geometry, epoch.los)
    subsets, rots, errs = [], [], []
    for k in range(cfg.n_smin, n + 1):
        for sub in itertools.combinations(range(n), k):
            R = solver.solve(sub)
            if R is None:
                continue
            subsets.append(sub)
            rots.append(R)
            errs.append(_dist(R_ref, R))
    if not subsets:
        return DetectionResult(
            gamma=np.ones(n, dtype=int), s_best=[], R_best=None, er_best=math.inf, solves=solver.calls
        )
    errs = np.array(errs)
    eps = cfg.dbscan_eps if cfg.dbscan_eps is not None else cfg.eps_inlier / 2
    labels = DBSCAN(eps=eps, min_samples=cfg.dbscan_min_pts).fit(errs.reshape(-1, 1)).labels_
    clusters = [np.flatnonzero(labels == c) for c in sorted(set(labels.tolist()) - {-1})]
    if not clusters:
        clusters = [np.array([int(np.argmin(errs))])]
    chosen = min(clusters, key=lambda idx: (float(errs[idx].mean()), -idx.size))
    best = max(chosen, key=lambda i: (len(subsets[i]), -errs[i]))
    s_best = list(subsets[best])
    return DetectionResult(
        gamma=_gamma(n, s_best),
        s_best=s_best,
        R_best=rots[best],
        er_best=float(errs[best]),
        solves=solver.calls,
        hypothesis_solves=solver.calls,
        extra={"clusters": len(clusters), "subsets": len(subsets)},
    )


def no_detection(epoch, geometry, R_ref):
    """Keep every satellite; the all-satellite attitude for comparison."""
    n = epoch.n_sats
    solver = SubsetSolver(epoch.phase, geometry, epoch.los)
    R = solver.solve(range(n), strict=False)
    er = _dist(R_ref, R) if R is not None else math.inf
    return DetectionResult(
        gamma=np.zeros(n, dtype=int), s_best=list(range(n)), R_best=R, er_best=er, solves=1
    )


def baseline_error_deg(R_est, R_true):
    """Mean angle (deg) between estimated and true x and y baseline directions."""
    out = []
    for c in (0, 1):
        a, b = R_est[:, c], R_true[:, c]
        out.append(math.degrees(math.atan2(np.linalg.norm(np.cross(a, b)), float(a @ b))))
    return 0.5 * (out[0] + out[1])


def score_detection(items):
    """Aggregate ``[(DetectionResult, gamma_truth, R_truth or None), ...]``."""
    if not items:
        raise ValueError("nothing to score")
    ok = tp_miss = n_cont = fp = n_clean = wrong = total = 0
    maes = []
    for item in items:
        res, truth = item[0], np.asarray(item[1], dtype=int)
        R_true = item[2] if len(item) > 2 else None
        g = np.asarray(res.gamma, dtype=int)
        ok += int(np.array_equal(g, truth))
        n_cont += int(truth.sum())
        n_clean += int((truth == 0).sum())
        tp_miss += int(((truth == 1) & (g == 0)).sum())
        fp += int(((truth == 0) & (g == 1)).sum())
        wrong += int((g != truth).sum())
        total += truth.size
        if R_true is not None and res.R_best is not None:
            maes.append(baseline_error_deg(res.R_best, R_true))
    return BenchmarkMetrics(
        success_rate=ok / len(items),
        false_negative_rate=tp_miss / n_cont if n_cont else 0.0,
        false_positive_rate=fp / n_clean if n_clean else 0.0,
        misclassification_rate=wrong / total if total else 0.0,
        baseline_mae=float(np.mean(maes)) if maes else float("nan"),
        epochs=len(items),
        fn_undefined=n_cont == 0,
        fp_undefined=n_clean == 0,
    )
