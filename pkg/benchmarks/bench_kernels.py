"""Compare the numba kernels with their numpy twins.

    python benchmarks/bench_kernels.py            # both backends side by side
    TORICBRANES_NO_NUMBA=1 python benchmarks/...  # numpy only

Prints one line per kernel with best-of-N wall times and the max difference
between the two backends' results.
"""

import argparse
import time

import numpy as np

from toricbranes import kernels
from toricbranes._backend import HAVE_NUMBA
from toricbranes.fanio import load_fan
from toricbranes.periods import QuadratureSpec, a_central_charge, large_radius_point


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cells_case(n_cells, seed=0):
    rng = np.random.default_rng(seed)
    lo = rng.uniform(-20, 20, size=(n_cells, 2))
    hi = lo + rng.uniform(0.05, 2.0, size=(n_cells, 2))
    vbar = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0], [0.0, 0.0]])
    logx = np.log(np.array([1.0, 1.0, 1.0, 40.0]))
    return lo, hi, vbar, logx, np.zeros(2), 1.0, 0.0


def count_case(scale):
    # dilated triangle x >= 0, y >= 0, x + y <= scale, padded box
    amat = np.array([[1, 0], [0, 1], [-1, -1]], dtype=np.int64)
    bvec = np.array([0, 0, -scale], dtype=np.int64)
    lo = np.array([-1, -1], dtype=np.int64)
    hi = np.array([scale + 1, scale + 1], dtype=np.int64)
    return amat, bvec, lo, hi


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--cells", type=int, default=20000)
    ap.add_argument("--scale", type=int, default=600)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = [False, True] if HAVE_NUMBA else [False]
    print(f"numba available: {HAVE_NUMBA}")

    case = cells_case(args.cells)
    if HAVE_NUMBA:
        kernels.evaluate_cells(case[0][:2], case[1][:2], *case[2:], use_numba=True)  # compile
    results = {}
    for use in backends:
        t, out = best_of(lambda: kernels.evaluate_cells(*case, use_numba=use), args.repeat)
        results[use] = out
        print(f"cells   {'numba' if use else 'numpy':5s}  {args.cells:7d} boxes  {t * 1e3:9.2f} ms")
    if len(results) == 2:
        diff = max(float(np.max(np.abs(a - b))) for a, b in zip(results[False], results[True]))
        print(f"cells   max |numba - numpy| = {diff:.2e}")

    case = count_case(args.scale)
    counts = {}
    for use in backends:
        if use:
            kernels.count_points(*count_case(3), use_numba=True)  # compile
        t, out = best_of(lambda: kernels.count_points(*case, use_numba=use), args.repeat)
        counts[use] = out
        print(f"count   {'numba' if use else 'numpy':5s}  scale {args.scale:5d}       {t * 1e3:9.2f} ms  -> {out}")
    expected = (args.scale + 1) * (args.scale + 2) // 2
    print(f"count   exact answer {expected}, backends agree: {len(set(counts.values())) == 1}")

    # end to end: one local P^2 period integral
    fan = load_fan("local_p2")
    x = large_radius_point(fan, 80.0)
    spec = QuadratureSpec(rel_tol=1e-12)
    t, res = best_of(lambda: a_central_charge(fan, (1, 0, 2), x, spec), max(1, args.repeat // 2))
    print(f"period  default backend   local P2, c=(1,0,2)  {t * 1e3:9.2f} ms  ({res.cells} cells)")


if __name__ == "__main__":
    main()
