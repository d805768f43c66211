"""Numba kernels for per-root neighborhood scans.

One fused pass per root: BFS layer expansion until the cumulative size
reaches m, smallest-id truncation of the last layer, and an exactly rounded
(Shewchuk-style) sum of observations over the resulting exact neighborhood.
Exact rounding makes each per-root average independent of accumulation
order, which is what guarantees bit-identical results for any worker count.

Kernels release the GIL so the Python-side wrappers can chunk roots across
threads; every root writes only its own output slot.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# capacity of the per-thread partials buffer for exact summation; the number
# of live partials is bounded by the number of distinct binades, far below this
PARTIALS_CAP = 4096


@njit(cache=True, nogil=True, inline="always")
def _acc_add(partials, n_p, x):
    """Add x into a Shewchuk partials array; returns the new partial count."""
    i = 0
    for p in range(n_p):
        y = partials[p]
        if abs(x) < abs(y):
            x, y = y, x
        hi = x + y
        lo = y - (hi - x)
        if lo != 0.0:
            partials[i] = lo
            i += 1
        x = hi
    partials[i] = x
    return i + 1


@njit(cache=True, nogil=True, inline="always")
def _acc_round(partials, n_p):
    """Round a partials array to the nearest double (math.fsum tail logic)."""
    n = n_p
    hi = 0.0
    if n > 0:
        n -= 1
        hi = partials[n]
        lo = 0.0
        while n > 0:
            x = hi
            n -= 1
            y = partials[n]
            hi = x + y
            yr = hi - x
            lo = y - yr
            if lo != 0.0:
                break
        # round-half-even correction from the next lower partial
        if n > 0 and ((lo < 0.0 and partials[n - 1] < 0.0)
                      or (lo > 0.0 and partials[n - 1] > 0.0)):
            y = lo * 2.0
            x = hi + y
            yr = x - hi
            if y == yr:
                hi = x
    return hi


@njit(cache=True, nogil=True, inline="always")
def _select_smallest(a, m, need):
    """Partition a[:m] so that a[:need] holds the `need` smallest values."""
    lo, hi = 0, m - 1
    while lo < hi:
        mid = (lo + hi) >> 1
        x, y, z = a[lo], a[mid], a[hi]
        if x > y:
            x, y = y, x
        if y > z:
            y, z = z, y
        if x > y:
            x, y = y, x
        pivot = y
        i, j = lo, hi
        while i <= j:
            while a[i] < pivot:
                i += 1
            while a[j] > pivot:
                j -= 1
            if i <= j:
                a[i], a[j] = a[j], a[i]
                i += 1
                j -= 1
        if need - 1 <= j:
            hi = j
        elif need - 1 >= i:
            lo = i
        else:
            break


@njit(cache=True, nogil=True)
def scan_roots(indptr, indices, x, k, start, stop, compute_sums,
               avg, radius, visited, skipped,
               order, stamp, scratch, partials):
    """Per-root fused BFS + exact-neighborhood average for roots [start, stop).

    ``order``, ``stamp``, ``scratch``, ``partials`` are caller-owned scratch
    arrays (one set per worker thread); ``stamp`` must be initialized to -1
    on first use and is self-cleaning across roots within one worker.
    """
    for v in range(start, stop):
        order[0] = v
        stamp[v] = v
        total = 1
        ls, le = 0, 1
        r = 0
        while total < k:
            new = 0
            for idx in range(ls, le):
                u = order[idx]
                for j in range(indptr[u], indptr[u + 1]):
                    w = indices[j]
                    if stamp[w] != v:
                        stamp[w] = v
                        order[le + new] = w
                        new += 1
            if new == 0:
                break
            ls = le
            le += new
            total += new
            r += 1
        visited[v] = total
        if total < k:
            skipped[v] = True
            avg[v] = np.nan
            radius[v] = -1
            continue
        skipped[v] = False
        radius[v] = r
        if not compute_sums:
            avg[v] = np.nan
            continue
        n_p = 0
        for i in range(ls):
            n_p = _acc_add(partials, n_p, x[order[i]])
        need = k - ls
        m = le - ls
        if need == m:
            for i in range(ls, le):
                n_p = _acc_add(partials, n_p, x[order[i]])
        else:
            for i in range(m):
                scratch[i] = order[ls + i]
            _select_smallest(scratch, m, need)
            for i in range(need):
                n_p = _acc_add(partials, n_p, x[scratch[i]])
        avg[v] = _acc_round(partials, n_p) / k


@njit(cache=True, nogil=True)
def exact_sum(values):
    """Correctly rounded sum of a 1-d float64 array (fsum semantics)."""
    partials = np.empty(PARTIALS_CAP)
    n_p = 0
    for i in range(len(values)):
        n_p = _acc_add(partials, n_p, values[i])
    return _acc_round(partials, n_p)
