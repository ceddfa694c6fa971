#!/usr/bin/env python3
"""Micro-benchmark for the nearest-neighbor engine.

Times build and batch query at increasing sizes on uniform clouds plus one
structured scan-like cloud, and reports the speedup over the in-repo
brute-force baseline (timed on a query subsample at full index size, scaled
linearly per query).
"""

import argparse
import time

import numpy as np

from blindspot import nn
from blindspot.runtime import set_thread_count


def structured_cloud(n: int, rng) -> np.ndarray:
    az = rng.uniform(0, 2 * np.pi, size=n)
    ring = rng.choice([2.0, 5.0, 9.0, 14.0, 22.0, 35.0, 60.0], size=n)
    return np.stack([ring * np.cos(az), ring * np.sin(az),
                     rng.uniform(0, 0.05, size=n)], axis=-1)


def bench(pts: np.ndarray, qs: np.ndarray, label: str, sample: int) -> None:
    t0 = time.perf_counter()
    tree = nn.build(pts)
    t_build = time.perf_counter() - t0
    t0 = time.perf_counter()
    d, _ = nn.nearest_batch(tree, qs)
    t_query = time.perf_counter() - t0
    k = min(sample, len(qs))
    t0 = time.perf_counter()
    d_ref, _ = nn.brute_force_nearest(pts, qs[:k])
    t_brute = (time.perf_counter() - t0) * (len(qs) / k)
    assert np.max(np.abs(d[:k] - d_ref)) < 1e-12
    print(f"{label:>26}: build {t_build:7.3f} s  query {t_query:7.3f} s  "
          f"brute(est) {t_brute:9.1f} s  speedup {t_brute / (t_build + t_query):8.1f}x")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--max-size", type=int, default=1_000_000)
    parser.add_argument("--sample", type=int, default=2000,
                        help="brute-force query subsample size")
    args = parser.parse_args()
    set_thread_count(args.threads)
    rng = np.random.default_rng(0)

    n = 1000
    while n <= args.max_size:
        pts = rng.uniform(-100, 100, size=(n, 3))
        qs = rng.uniform(-100, 100, size=(n, 3))
        bench(pts, qs, f"uniform {n} x {n}", args.sample)
        n *= 10
    n = min(args.max_size, 500_000)
    bench(structured_cloud(n, rng), structured_cloud(n, rng),
          f"scan rings {n} x {n}", args.sample)


if __name__ == "__main__":
    main()
