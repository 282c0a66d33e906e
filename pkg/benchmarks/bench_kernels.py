"""Time the compiled and pure-Python basis-integral kernels on identical inputs.

    python3 benchmarks/bench_kernels.py --paths 512 --n 5 --step 1e-3
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from oushrink import mc
from oushrink._kernels import KERNELS
from oushrink._kernels._fallback import trig_values
from oushrink.oulevy import NoiseParams, _block_draws, _grid_steps


def make_inputs(params: NoiseParams, p: int, n: float, h: float, paths: int, seed: int):
    steps, step = _grid_steps(n, h)
    table = np.ascontiguousarray(trig_values(np.arange(steps) * step, p))
    counts, times, marks, normals = _block_draws(mc.block_rng(seed, 0), params, n, steps, paths, None)
    return (steps, step, params.a, params.rho1, params.rho2, table, counts, times, marks, normals)


def best_of(fn, args, repeats: int) -> tuple[float, np.ndarray]:
    best, out = float("inf"), None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=512)
    ap.add_argument("--p", type=int, default=3)
    ap.add_argument("--n", type=float, default=5.0)
    ap.add_argument("--step", type=float, default=1e-3)
    ap.add_argument("--a", type=float, default=-0.5)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    params = NoiseParams(args.a, 1.0, 0.7, 1.0)
    inputs = make_inputs(params, args.p, args.n, args.step, args.paths, args.seed)
    results = {}
    print(f"paths={args.paths} steps={inputs[0]} p={args.p}")
    for name, kernel in sorted(KERNELS.items()):
        secs, out = best_of(kernel, inputs, args.repeats)
        results[name] = (secs, out)
        print(f"{name:>7}: {secs * 1e3:9.2f} ms total  {secs / args.paths * 1e6:9.2f} us/path")
    if len(results) == 2:
        (ts, xs), (tc, xc) = results["python"], results["cython"]
        print(f"speedup: {ts / tc:.2f}x   max |diff|: {np.max(np.abs(xs - xc)):.3e}")
    else:
        print("compiled kernel not available; only the fallback was timed")


if __name__ == "__main__":
    main()
