"""Time the compiled and numpy backends on the three hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--threads 1]
"""
import argparse
import os
import time

import numpy as np

from weakcurv import kernels


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    f = rng.standard_normal((384, 384))
    k = rng.random((65, 65))
    t = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    cx, cy = np.cos(t) + 0.1 * np.cos(5 * t), np.sin(t)
    px, py = rng.uniform(-1.5, 1.5, (2, 20000))
    # pixel-scale triangles, as produced by the lattice push-forward
    c = np.repeat(rng.uniform(0.01, 0.99, (200000, 2)), 3, axis=0).reshape(-1, 6)
    tri = c + rng.uniform(-3 / 1024, 3 / 1024, c.shape)
    return {
        "correlate_valid 384^2 * 65^2": lambda m: m.correlate_valid(f, k, kernels.threads()),
        "winding_sums 20k pts x 4096 seg": lambda m: m.winding_sums(px, py, cx, cy, kernels.threads()),
        "raster_triangles 200k on 1024^2": lambda m: m.raster_triangles(tri, 0.0, 0.0, 1 / 1024, 1024, 1024),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    os.environ["WEAKCURV_THREADS"] = str(args.threads)
    mods = {"python": kernels.backend_module("python")}
    try:
        mods["cython"] = kernels.backend_module("cython")
    except ImportError:
        print("compiled backend not built; timing the numpy fallback only")
    print(f"{'kernel':36s}" + "".join(f"{n:>12s}" for n in mods) + ("     speedup" if len(mods) == 2 else ""))
    for name, fn in cases(np.random.default_rng(0)).items():
        ts = [_best(lambda m=m: fn(m), args.repeat) for m in mods.values()]
        row = f"{name:36s}" + "".join(f"{t:11.4f}s" for t in ts)
        if len(ts) == 2:
            row += f"{ts[0] / ts[1]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
