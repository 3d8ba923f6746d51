"""Numeric hot kernels with two interchangeable backends.

The O(n^2) loops that dominate runtime live here: annulus neighbor counting
for the density profile, maximum pairwise distance, single-linkage labeling,
and Damerau-Levenshtein distance. Each kernel has a numba @njit implementation
and a vectorized pure-numpy fallback. The backend is chosen at import time:
numba when importable, unless the environment variable PLACEREF_NUMBA is set
to "0" (then the numpy path is used). Both backends produce identical results:
neighbor counts and edit distances are integers, and float comparisons use the
same IEEE-754 operations in the same order.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("PLACEREF_NUMBA", "1") != "0"


# ---------------------------------------------------------------------------
# loop implementations (compiled by numba when available)
# ---------------------------------------------------------------------------


def _annulus_counts_loops(xs, ys, edges, row_start, row_stop):
    """Per-annulus neighbor counts for points in [row_start, row_stop).

    Bin k holds pairs with edges[k-1] < dist <= edges[k] (the lower edge of
    bin 0 is 0; zero distances are never counted). Each ordered (i, j) pair
    with i != j contributes one count, so a symmetric pair contributes twice.
    """
    n = xs.size
    nbins = edges.size
    counts = np.zeros(nbins, dtype=np.int64)
    for i in range(row_start, row_stop):
        xi = xs[i]
        yi = ys[i]
        for j in range(n):
            if j == i:
                continue
            dx = xs[j] - xi
            dy = ys[j] - yi
            dist = math.sqrt(dx * dx + dy * dy)
            if dist <= 0.0:
                continue
            # binary search: smallest k with dist <= edges[k]
            lo = 0
            hi = nbins - 1
            if dist > edges[hi]:
                continue
            while lo < hi:
                mid = (lo + hi) // 2
                if dist <= edges[mid]:
                    hi = mid
                else:
                    lo = mid + 1
            counts[lo] += 1
    return counts


def _max_pairwise_distance_loops(xs, ys):
    n = xs.size
    best = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dx = xs[j] - xs[i]
            dy = ys[j] - ys[i]
            dist = math.sqrt(dx * dx + dy * dy)
            if dist > best:
                best = dist
    return best


def _single_linkage_loops(xs, ys, cutoff):
    """Union-find over all pairs within ``cutoff``; returns root labels."""
    n = xs.size
    parent = np.arange(n, dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            dx = xs[j] - xs[i]
            dy = ys[j] - ys[i]
            if math.sqrt(dx * dx + dy * dy) <= cutoff:
                ri = i
                while parent[ri] != ri:
                    ri = parent[ri]
                rj = j
                while parent[rj] != rj:
                    rj = parent[rj]
                if ri < rj:
                    parent[rj] = ri
                else:
                    parent[ri] = rj
    labels = np.empty(n, dtype=np.int64)
    for i in range(n):
        r = i
        while parent[r] != r:
            r = parent[r]
        labels[i] = r
    return labels


def _damerau_levenshtein_loops(a, b):
    """Restricted Damerau-Levenshtein distance on integer code arrays.

    Transpositions of adjacent symbols count 1, like substitutions.
    """
    la = a.size
    lb = b.size
    if la == 0:
        return lb
    if lb == 0:
        return la
    d = np.empty((la + 1, lb + 1), dtype=np.int64)
    for i in range(la + 1):
        d[i, 0] = i
    for j in range(lb + 1):
        d[0, j] = j
    for i in range(1, la + 1):
        for j in range(1, lb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            best = d[i - 1, j] + 1
            if d[i, j - 1] + 1 < best:
                best = d[i, j - 1] + 1
            if d[i - 1, j - 1] + cost < best:
                best = d[i - 1, j - 1] + cost
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                if d[i - 2, j - 2] + 1 < best:
                    best = d[i - 2, j - 2] + 1
            d[i, j] = best
    return d[la, lb]


if HAS_NUMBA:
    _sig_cache = dict(cache=True, nogil=True)
    annulus_counts_numba = numba.njit(**_sig_cache)(_annulus_counts_loops)
    max_pairwise_distance_numba = numba.njit(**_sig_cache)(_max_pairwise_distance_loops)
    single_linkage_numba = numba.njit(**_sig_cache)(_single_linkage_loops)
    damerau_levenshtein_numba = numba.njit(**_sig_cache)(_damerau_levenshtein_loops)
else:  # pragma: no cover
    annulus_counts_numba = None
    max_pairwise_distance_numba = None
    single_linkage_numba = None
    damerau_levenshtein_numba = None


# ---------------------------------------------------------------------------
# vectorized numpy fallbacks
# ---------------------------------------------------------------------------


def annulus_counts_numpy(xs, ys, edges, row_start, row_stop):
    dx = xs[row_start:row_stop, None] - xs[None, :]
    dy = ys[row_start:row_stop, None] - ys[None, :]
    dist = np.sqrt(dx * dx + dy * dy)
    rows = np.arange(row_start, row_stop)
    dist[np.arange(rows.size), rows] = np.nan  # self-pairs never count
    flat = dist.ravel()
    flat = flat[~np.isnan(flat)]
    flat = flat[(flat > 0.0) & (flat <= edges[-1])]
    # side="left": smallest k with edges[k] >= dist, i.e. (edges[k-1], edges[k]]
    idx = np.searchsorted(edges, flat, side="left")
    return np.bincount(idx, minlength=edges.size).astype(np.int64)


def max_pairwise_distance_numpy(xs, ys):
    if xs.size < 2:
        return 0.0
    dx = xs[:, None] - xs[None, :]
    dy = ys[:, None] - ys[None, :]
    return float(np.sqrt(dx * dx + dy * dy).max())


def single_linkage_numpy(xs, ys, cutoff):
    n = xs.size
    dx = xs[:, None] - xs[None, :]
    dy = ys[:, None] - ys[None, :]
    adjacent = np.sqrt(dx * dx + dy * dy) <= cutoff
    labels = np.full(n, -1, dtype=np.int64)
    for seed in range(n):
        if labels[seed] >= 0:
            continue
        frontier = np.zeros(n, dtype=bool)
        frontier[seed] = True
        member = np.zeros(n, dtype=bool)
        while frontier.any():
            member |= frontier
            frontier = (adjacent[frontier].any(axis=0)) & ~member
        labels[member] = seed
    return labels


def damerau_levenshtein_numpy(a, b):
    # The DP recurrence is inherently sequential; reuse the loop body.
    return _damerau_levenshtein_loops(a, b)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def annulus_counts(xs, ys, edges, row_start=0, row_stop=None):
    row_stop = xs.size if row_stop is None else row_stop
    if USE_NUMBA:
        return annulus_counts_numba(xs, ys, edges, row_start, row_stop)
    return annulus_counts_numpy(xs, ys, edges, row_start, row_stop)


def max_pairwise_distance(xs, ys):
    if USE_NUMBA:
        return max_pairwise_distance_numba(xs, ys)
    return max_pairwise_distance_numpy(xs, ys)


def single_linkage_labels(xs, ys, cutoff):
    """Connected-component labels under dist <= cutoff, canonicalized.

    Labels are renumbered 0..k-1 in order of first appearance so both
    backends return identical arrays.
    """
    raw = single_linkage_numba(xs, ys, cutoff) if USE_NUMBA else single_linkage_numpy(xs, ys, cutoff)
    remap: dict[int, int] = {}
    out = np.empty(raw.size, dtype=np.int64)
    for i, r in enumerate(raw):
        out[i] = remap.setdefault(int(r), len(remap))
    return out


def damerau_levenshtein(a: str, b: str) -> int:
    ca = np.frombuffer(a.encode("utf-32-le"), dtype=np.uint32).astype(np.int64)
    cb = np.frombuffer(b.encode("utf-32-le"), dtype=np.uint32).astype(np.int64)
    if USE_NUMBA:
        return int(damerau_levenshtein_numba(ca, cb))
    return int(damerau_levenshtein_numpy(ca, cb))
