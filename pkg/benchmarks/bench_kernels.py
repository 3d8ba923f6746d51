"""Benchmark the numba kernels against the pure-numpy fallbacks.

Usage:
    python benchmarks/bench_kernels.py [--n 2000] [--repeats 5]

The same kernels are dispatched at import time by the PLACEREF_NUMBA
environment variable; here both implementations are called directly so one
process can time the pair. Numba compile time is excluded by a warmup call.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from placeref import _kernels as K


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        times.append(time.perf_counter() - started)
    return min(times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=2000, help="point count (default 2000)")
    parser.add_argument("--repeats", type=int, default=5, help="best-of repeats (default 5)")
    parser.add_argument("--tokens", type=int, default=400, help="token pairs for edit distance")
    args = parser.parse_args()

    if not K.HAS_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(0)
    xs = rng.uniform(0, 20000, args.n)
    ys = rng.uniform(0, 20000, args.n)
    max_dist = K.max_pairwise_distance_numpy(xs, ys)
    edges = (np.arange(int(np.ceil(max_dist / 100.0))) + 1.0) * 100.0

    words = ["".join(rng.choice(list("abcdefghilmnorstu"), rng.integers(3, 14)))
             for _ in range(args.tokens)]
    pairs = [(words[i], words[(i * 7 + 3) % len(words)]) for i in range(len(words))]

    def dl_all(fn):
        def run():
            for a, b in pairs:
                ca = np.frombuffer(a.encode("utf-32-le"), dtype=np.uint32).astype(np.int64)
                cb = np.frombuffer(b.encode("utf-32-le"), dtype=np.uint32).astype(np.int64)
                fn(ca, cb)
        return run

    cases = [
        ("annulus_counts",
         lambda: K.annulus_counts_numpy(xs, ys, edges, 0, args.n),
         lambda: K.annulus_counts_numba(xs, ys, edges, 0, args.n)),
        ("max_pairwise_distance",
         lambda: K.max_pairwise_distance_numpy(xs, ys),
         lambda: K.max_pairwise_distance_numba(xs, ys)),
        ("single_linkage",
         lambda: K.single_linkage_numpy(xs, ys, 500.0),
         lambda: K.single_linkage_numba(xs, ys, 500.0)),
        ("damerau_levenshtein",
         dl_all(K._damerau_levenshtein_loops),
         dl_all(K.damerau_levenshtein_numba)),
    ]

    print(f"n = {args.n} points, {len(pairs)} token pairs, best of {args.repeats}")
    print(f"{'kernel':24s} {'numpy':>10s} {'numba':>10s} {'speedup':>9s}")
    for name, numpy_fn, numba_fn in cases:
        numba_fn()  # warmup: triggers compilation outside the timed region
        t_np = best_of(numpy_fn, args.repeats)
        t_nb = best_of(numba_fn, args.repeats)
        print(f"{name:24s} {t_np * 1e3:9.2f}ms {t_nb * 1e3:9.2f}ms {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
