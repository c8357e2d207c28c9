#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Covers the four hot kernels: triangle z-buffer rasterization,
depth-tested segment drawing, Zhang-Suen thinning passes, and
point-to-mesh distances.

Usage:
    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --sizes 160 320 640 --output results.json
"""

import argparse
import json
import time

import numpy as np

from partsketch.kernels import _numba, _numpy


def timed(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_zbuffer(size, n_tris, repeats):
    rng = np.random.default_rng(0)
    xy = rng.uniform(-10, size + 10, size=(n_tris, 3, 2))
    depth = rng.uniform(0, 1, size=(n_tris, 3))
    _numba.zbuffer_triangles(xy, depth, size)  # warm JIT
    t_nb = timed(lambda: _numba.zbuffer_triangles(xy, depth, size), repeats)
    t_np = timed(lambda: _numpy.zbuffer_triangles(xy, depth, size), max(1, repeats // 4))
    return t_nb, t_np


def bench_segments(size, n_segs, repeats):
    rng = np.random.default_rng(1)
    zbuf = np.zeros((size, size))
    segs = rng.uniform(0, size, size=(n_segs, 2, 2))
    seg_d = rng.uniform(0, 1, size=(n_segs, 2))

    def run(impl):
        img = np.zeros((size, size), dtype=np.uint8)
        impl.draw_segments(img, zbuf, segs, seg_d, 2, 0.5)

    run(_numba)
    return timed(lambda: run(_numba), repeats), timed(lambda: run(_numpy), max(1, repeats // 4))


def bench_thinning(size, repeats):
    rng = np.random.default_rng(2)
    base = (rng.random((size, size)) < 0.35).astype(np.uint8)

    def run(impl):
        img = base.copy()
        while impl.thin_pass(img):
            pass
        impl.remove_blocks(img)

    run(_numba)
    return timed(lambda: run(_numba), repeats), timed(lambda: run(_numpy), max(1, repeats // 4))


def bench_point_tri(n_pts, n_tris, repeats):
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(n_pts, 3))
    tris = rng.normal(size=(n_tris, 3, 3))
    _numba.min_point_tri_dist(pts, tris)
    return (
        timed(lambda: _numba.min_point_tri_dist(pts, tris), repeats),
        timed(lambda: _numpy.min_point_tri_dist(pts, tris), max(1, repeats // 4)),
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[160, 320])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--output", type=str, default=None)
    args = parser.parse_args()

    results = []
    print(f"{'kernel':<22} {'size':>8} {'numba (ms)':>12} {'numpy (ms)':>12} {'speedup':>9}")
    print("-" * 68)

    for size in args.sizes:
        rows = [
            ("zbuffer_triangles", size, *bench_zbuffer(size, 400, args.repeats)),
            ("draw_segments", size, *bench_segments(size, 300, args.repeats)),
            ("thinning", size, *bench_thinning(size, args.repeats)),
        ]
        for name, sz, t_nb, t_np in rows:
            speedup = t_np / t_nb if t_nb > 0 else float("inf")
            print(f"{name:<22} {sz:>8} {t_nb * 1e3:>12.2f} {t_np * 1e3:>12.2f} {speedup:>8.1f}x")
            results.append({"kernel": name, "size": sz, "numba_s": t_nb, "numpy_s": t_np,
                            "speedup": speedup})

    t_nb, t_np = bench_point_tri(2000, 500, args.repeats)
    speedup = t_np / t_nb
    print(f"{'min_point_tri_dist':<22} {'2000x500':>8} {t_nb * 1e3:>12.2f} {t_np * 1e3:>12.2f} {speedup:>8.1f}x")
    results.append({"kernel": "min_point_tri_dist", "size": "2000x500",
                    "numba_s": t_nb, "numpy_s": t_np, "speedup": speedup})

    if args.output:
        with open(args.output, "w") as f:
            json.dump(results, f, indent=2)
        print(f"\nwrote {args.output}")


if __name__ == "__main__":
    main()
