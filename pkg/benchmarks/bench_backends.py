"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three hot paths (rasterized IoU counting, Gaussian channel
rendering, convex clipping) on identical workloads for every available
kernel set.

Usage: python benchmarks/bench_backends.py [--pairs 200] [--channels 500]
"""

import argparse
import math
import time

import numpy as np

from oskgeom import kernels
from oskgeom.geom import positively_oriented, quad_from_points


def make_rects(rng, n):
    quads = []
    for _ in range(n):
        cx, cy = rng.uniform(0, 200, 2)
        w, h = rng.uniform(10, 80, 2)
        ang = rng.uniform(0, math.pi)
        c, s = math.cos(ang), math.sin(ang)
        pts = np.array([[-w / 2, -h / 2], [w / 2, -h / 2], [w / 2, h / 2], [-w / 2, h / 2]])
        rot = np.array([[c, -s], [s, c]])
        quads.append(quad_from_points(pts @ rot.T + (cx, cy)))
    return quads


def bench_raster(kset, pairs, res=2000):
    start = time.perf_counter()
    acc = 0.0
    for a, b in pairs:
        pts = np.vstack([a.vertices, b.vertices])
        minx, miny = pts[:, 0].min(), pts[:, 1].min()
        dx = (pts[:, 0].max() - minx) / res
        dy = (pts[:, 1].max() - miny) / res
        both, either = kset.raster_counts(a.vertices, b.vertices, minx, miny, dx, dy, res)
        acc += both / either if either else 0.0
    return time.perf_counter() - start, acc


def bench_gauss(kset, jobs, m=56):
    start = time.perf_counter()
    acc = 0.0
    for mux, muy, comps in jobs:
        acc += float(kset.gauss_channel(m, mux, muy, comps).sum())
    return time.perf_counter() - start, acc


def bench_clip(kset, pairs):
    start = time.perf_counter()
    acc = 0.0
    for a, b in pairs:
        poly = kset.clip_polygon(positively_oriented(a.vertices), positively_oriented(b.vertices))
        acc += poly.shape[0]
    return time.perf_counter() - start, acc


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=200, help="quad pairs per IoU benchmark")
    ap.add_argument("--channels", type=int, default=500, help="Gaussian channels to render")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    quads = make_rects(rng, 2 * args.pairs)
    pairs = list(zip(quads[::2], quads[1::2]))
    jobs = [
        (
            rng.uniform(5, 50),
            rng.uniform(5, 50),
            np.array(
                [[math.cos(t), math.sin(t), 1 / 5.76, 1 / 0.64] for t in rng.uniform(0, math.pi, 2)]
            ),
        )
        for _ in range(args.channels)
    ]

    sets = kernels.available_kernel_sets()
    if len(sets) > 1:
        # trigger jit compilation outside the timed region
        bench_raster(sets[-1], pairs[:2])
        bench_gauss(sets[-1], jobs[:2])
        bench_clip(sets[-1], pairs[:2])

    rows = []
    for kset in sets:
        t_r, acc_r = bench_raster(kset, pairs)
        t_g, acc_g = bench_gauss(kset, jobs)
        t_c, acc_c = bench_clip(kset, pairs * 20)
        rows.append((kset.name, t_r, t_g, t_c, (acc_r, acc_g, acc_c)))

    print(f"{'backend':<8} {'raster_iou':>12} {'gauss_chan':>12} {'clip':>12}")
    for name, t_r, t_g, t_c, _ in rows:
        print(f"{name:<8} {t_r:>11.3f}s {t_g:>11.3f}s {t_c:>11.3f}s")
    if len(rows) == 2:
        checks = [
            abs(a - b) <= 1e-6 * max(1.0, abs(a))
            for a, b in zip(rows[0][4], rows[1][4])
        ]
        print(f"cross-backend results agree: {all(checks)}")
        print(
            "numba speedup: "
            f"raster {rows[0][1] / rows[1][1]:.1f}x, "
            f"gauss {rows[0][2] / rows[1][2]:.1f}x, "
            f"clip {rows[0][3] / rows[1][3]:.1f}x"
        )


if __name__ == "__main__":
    main()
