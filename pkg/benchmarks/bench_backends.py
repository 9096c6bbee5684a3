#!/usr/bin/env python3
"""Compare the numba and pure-numpy backends on the hot kernels.

Each backend runs in its own interpreter with DP3_BACKEND set, so the
numpy run never imports numba.  The first call of every kernel is timed
separately (JIT compilation for numba) and excluded from the steady-state
numbers, which are the best of ``--repeat`` runs.

    python benchmarks/bench_backends.py [--resolution 64] [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _timed(fn, repeat):
    t0 = time.perf_counter()
    fn()
    first = time.perf_counter() - t0
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return first, best


def worker(resolution, repeat):
    from dp3 import BACKEND, kernels
    from dp3.periods import sign_field, solve_period_problem
    from dp3.surface import build_domain_grid, integrate_grid_edges, integrate_piece

    r = solve_period_problem(0.5)
    grid = build_domain_grid(r.params, resolution)
    piece = integrate_piece(grid)
    cases = {
        "sign field 64x64 (xi1, xi2)": lambda: sign_field(0.5, n=64),
        "period solve, lambda=0.5": lambda: solve_period_problem(0.5),
        f"grid edges, resolution {resolution}": lambda: integrate_grid_edges(grid),
        f"cotangent Laplacian, {piece.n_vertices} vertices": lambda: kernels.cotan_laplacian(piece.vertices,
                                                                                              piece.faces),
    }
    out = {"backend": BACKEND, "cases": {}}
    for name, fn in cases.items():
        first, best = _timed(fn, repeat)
        out["cases"][name] = {"first": first, "best": best}
    print(json.dumps(out))


def run_backend(backend, resolution, repeat):
    env = dict(os.environ, DP3_BACKEND=backend)
    cmd = [sys.executable, os.path.abspath(__file__), "--worker", "--resolution", str(resolution),
           "--repeat", str(repeat)]
    proc = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--resolution", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        worker(args.resolution, args.repeat)
        return

    results = {b: run_backend(b, args.resolution, args.repeat) for b in ("numba", "numpy")}
    if results["numba"]["backend"] != "numba":
        print("numba is not importable; both runs used numpy")
    width = max(len(n) for n in results["numpy"]["cases"])
    print(f"{'kernel':<{width}}  {'numpy [s]':>10}  {'numba [s]':>10}  {'speedup':>8}  {'numba first call [s]':>21}")
    for name, np_t in results["numpy"]["cases"].items():
        nb_t = results["numba"]["cases"][name]
        print(f"{name:<{width}}  {np_t['best']:>10.4f}  {nb_t['best']:>10.4f}  "
              f"{np_t['best'] / nb_t['best']:>7.1f}x  {nb_t['first']:>21.3f}")


if __name__ == "__main__":
    main()
