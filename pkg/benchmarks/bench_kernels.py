"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat N] [--size S]

Sizes mimic one evolve() call at t = 10 (tens of thousands of contour
nodes against a few thousand packet energies).  The first numba call is
reported separately because it includes compilation or cache loading.
"""
import argparse
import time

import numpy as np

from gqd import kernels as K
from gqd._accel import HAVE_NUMBA


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--size", type=int, default=20000, help="number of contour nodes")
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    n, k = args.size, 2000
    zs = np.linspace(-10, 1600, n) + 0.07j
    e = np.sort(rng.uniform(0, 50, k))
    w = rng.standard_normal(k) + 0j
    c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    r = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    m = min(n, 4000)
    cases = {
        "resolvent_sums": lambda u: K.resolvent_sums(zs, e, w, use_numba=u),
        "contour_synthesis": lambda u: K.contour_synthesis(zs, c, e, use_numba=u),
        "norm_quadratic": lambda u: K.norm_quadratic(zs[:m], c[:m], r[:m], np.conj(r[:m]), use_numba=u),
        "eta_grid_sum": lambda u: K.eta_grid_sum(np.abs(c), c, zs.real, zs.real - 3, 1e-4, use_numba=u),
    }
    print(f"{'kernel':<20}{'numpy [s]':>12}{'numba [s]':>12}{'first call [s]':>16}{'speedup':>10}")
    for name, fn in cases.items():
        t_np = _best(lambda: fn(False), args.repeat)
        if HAVE_NUMBA:
            t0 = time.perf_counter()
            fn(True)
            first = time.perf_counter() - t0
            t_nb = _best(lambda: fn(True), args.repeat)
            print(f"{name:<20}{t_np:>12.4f}{t_nb:>12.4f}{first:>16.3f}{t_np / t_nb:>10.1f}")
        else:
            print(f"{name:<20}{t_np:>12.4f}{'n/a':>12}{'n/a':>16}{'n/a':>10}")


if __name__ == "__main__":
    main()
