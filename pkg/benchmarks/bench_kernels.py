"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py [--n 20000] [--repeat 3]

Numba timings exclude the first (compiling) call, which is reported separately.
"""
import argparse
import time

import numpy as np

from coldplasma import _env, kernels
from coldplasma.coefficients import dilation_multiplier
from coldplasma.geometry import build_cc_example_domain, build_half_disk
from coldplasma.grids import make_grid
from coldplasma.manufactured import Bump


def best_of(fn, repeat):
    ts = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t)
    return min(ts)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20000, help="containment query points")
    ap.add_argument("--n-trace", type=int, default=400, help="trajectories")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    dom = build_cc_example_domain()
    x0, x1, y0, y1 = dom.bbox
    px = rng.uniform(x0, x1, args.n)
    py = rng.uniform(y0, y1, args.n)

    disk = build_half_disk()
    mf = dilation_multiplier(4.0, 1.0, 0.1)
    grid = make_grid(disk, 1 / 64)
    src = grid.source(grid.sample(Bump((0.5, 0.1), 0.2)))
    pts = grid.points()
    pts = pts[rng.choice(len(pts), min(args.n_trace, len(pts)), replace=False)]

    cases = {
        "contains": lambda b: kernels.contains(dom.index, px, py, backend=b),
        "min_edge_distance": lambda b: kernels.min_edge_distance(dom.index, px[:2000],
                                                                 py[:2000], backend=b),
        "trace_batch": lambda b: kernels.trace_batch(disk.index, pts[:, 0], pts[:, 1],
                                                     mf.m, mf.mu, mf.a, src, 5e-3, 60.0,
                                                     backend=b),
    }
    backends = ["numpy"] + (["numba"] if _env.HAVE_NUMBA else [])
    print(f"{'kernel':<20}{'backend':<8}{'first [s]':>12}{'best [s]':>12}{'speedup':>10}")
    for name, fn in cases.items():
        base = None
        for b in backends:
            t0 = time.perf_counter()
            fn(b)
            first = time.perf_counter() - t0
            best = best_of(lambda: fn(b), args.repeat)
            base = best if base is None else base
            print(f"{name:<20}{b:<8}{first:>12.4f}{best:>12.4f}{base / best:>10.1f}")


if __name__ == "__main__":
    main()
