"""Compiled dynamic-programming kernels for grid p-variation."""

import numpy as np
from numba import njit


@njit(cache=True)
def _dist(v, i, j):
    d = v.shape[1]
    if d == 1:
        return abs(v[j, 0] - v[i, 0])
    acc = 0.0
    for k in range(d):
        diff = v[j, k] - v[i, k]
        acc += diff * diff
    return np.sqrt(acc)


@njit(cache=True)
def suffix_dp(v, p):
    """Best partition sums from each point to the last one.

    Returns ``(best, nxt)`` where ``best[i]`` is the maximal sum of
    ``|v[a_{k+1}] - v[a_k]|**p`` over index chains from ``i`` to ``n-1`` and
    ``nxt[i]`` the smallest successor attaining it.
    """
    n = v.shape[0]
    best = np.zeros(n)
    nxt = np.full(n, -1, dtype=np.int64)
    for i in range(n - 2, -1, -1):
        top = -1.0
        arg = -1
        for j in range(i + 1, n):
            cand = _dist(v, i, j) ** p + best[j]
            if cand > top:
                top = cand
                arg = j
        best[i] = top
        nxt[i] = arg
    return best, nxt


@njit(cache=True)
def prefix_dp(v, p):
    """``out[j]`` = maximal partition sum on points ``0..j``."""
    n = v.shape[0]
    out = np.zeros(n)
    for j in range(1, n):
        top = 0.0
        for i in range(j):
            cand = out[i] + _dist(v, i, j) ** p
            if cand > top:
                top = cand
        out[j] = top
    return out


@njit(cache=True)
def all_pairs_dp(v, p):
    """``out[i, j]`` = maximal partition sum on points ``i..j`` (upper triangle)."""
    n = v.shape[0]
    dp = np.empty((n, n))
    for a in range(n):
        for b in range(n):
            dp[a, b] = _dist(v, a, b) ** p
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            top = 0.0
            for k in range(i, j):
                cand = out[i, k] + dp[k, j]
                if cand > top:
                    top = cand
            out[i, j] = top
    return out


@njit(cache=True)
def suffix_dp_dist(dpow):
    """``suffix_dp`` on a precomputed matrix of powered distances."""
    n = dpow.shape[0]
    best = np.zeros(n)
    nxt = np.full(n, -1, dtype=np.int64)
    for i in range(n - 2, -1, -1):
        top = -1.0
        arg = -1
        for j in range(i + 1, n):
            cand = dpow[i, j] + best[j]
            if cand > top:
                top = cand
                arg = j
        best[i] = top
        nxt[i] = arg
    return best, nxt


@njit(cache=True)
def turning_points(x):
    """Indices of the first point, the last point and the strict turning points.

    Points inside monotone runs or repeating the previous kept value are
    dropped; for p >= 1 they never increase a partition sum.
    """
    n = x.shape[0]
    kept = np.empty(n, dtype=np.int64)
    kept[0] = 0
    m = 1
    direction = 0
    for i in range(1, n):
        diff = x[i] - x[kept[m - 1]]
        if diff == 0.0:
            continue
        s = 1 if diff > 0 else -1
        if m >= 2 and s == direction:
            kept[m - 1] = i
        else:
            kept[m] = i
            m += 1
            direction = s
    if kept[m - 1] != n - 1:
        if m >= 2:
            kept[m - 1] = n - 1
        else:
            kept[m] = n - 1
            m += 1
    return kept[:m]


@njit(cache=True)
def holder_scan(v, dt, nu):
    n = v.shape[0]
    top = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            r = _dist(v, i, j) / ((j - i) * dt) ** nu
            if r > top:
                top = r
    return top
