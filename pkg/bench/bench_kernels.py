"""Compiled kernels versus the numpy fallback.

    python3 bench/bench_kernels.py [--repeat N]

Times each kernel in-process through both modules, then one RANSAC
detection sweep end to end in two subprocesses (one forced onto the
fallback with ARRAYNAV_PURE_PYTHON=1).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from arraynav import _fallback, so3

try:
    from arraynav import _kernels
except ImportError:
    _kernels = None

E2E = r"""
import time, numpy as np
from arraynav import _core, experiments
cfg = experiments.RunConfig(trials=60, sigma_phase_mm=[1.0], n_mp=[2], detector="ransac", seed=0)
t0 = time.perf_counter()
experiments.run_static_bench(cfg)
print(_core.BACKEND, time.perf_counter() - t0)
"""


def cases(rng):
    R = so3.random_rotation(rng)
    R2 = so3.random_rotation(rng)
    v = rng.normal(size=3)
    H = rng.normal(size=(8, 3))
    H /= np.linalg.norm(H, axis=1)[:, None]
    ph = rng.uniform(-2, 2, (8, 5))
    ux, uy = H @ R[:, 0], H @ R[:, 1]
    geo = (0.30, 0.39, 0.30, 0.39, 0.1905, 0.1)
    return {
        "exp_so3": (lambda m: m.exp_so3(v)),
        "log_so3": (lambda m: m.log_so3(R)),
        "geodesic": (lambda m: m.geodesic(R, R2)),
        "direction_cosines[8]": (lambda m: m.direction_cosines(ph, *geo)),
        "fit_attitude[8]": (lambda m: m.fit_attitude(H, ux, uy, 0.69, 0.69, 0.1905)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20000)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
        return 1
    print(f"{'kernel':<22}{'python us':>11}{'cython us':>11}{'speedup':>9}")
    for name, fn in cases(np.random.default_rng(0)).items():
        n = args.repeat
        tp = min(timeit.repeat(lambda: fn(_fallback), number=n, repeat=3)) / n * 1e6
        tc = min(timeit.repeat(lambda: fn(_kernels), number=n, repeat=3)) / n * 1e6
        print(f"{name:<22}{tp:>11.2f}{tc:>11.2f}{tp / tc:>8.1f}x")
    if args.skip_e2e:
        return 0
    times = {}
    for pure in ("1", "0"):
        env = dict(os.environ, ARRAYNAV_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", E2E], capture_output=True, text=True, env=env, check=True)
        backend, secs = out.stdout.split()
        times[backend] = float(secs)
    print(f"\nstatic bench, 60 trials x (ransac + none): python {times['python']:.2f} s, "
          f"cython {times['cython']:.2f} s, speedup {times['python'] / times['cython']:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
