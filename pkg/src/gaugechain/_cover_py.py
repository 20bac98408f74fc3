"""Pure-Python branch and bound for the bounded minimum-weight cover problem."""
from __future__ import annotations

import math
from bisect import bisect_left

import numpy as np


def search(p, w, cnt, prev_a, prev_b, target, tol, max_nodes):
    """Exact ``min sum k_j w_j`` subject to ``sum k_j p_j >= target - tol`` and ``0 <= k_j <= cnt_j``.

    Inputs are sorted by ``p/w`` descending with ``p, w > 0``.  ``prev_a[j]`` and
    ``prev_b[j]`` name earlier groups (or -1) that must be taken whole before
    group ``j`` may be used.  Returns ``(best, take, nodes)``; ``best`` is
    ``inf`` when the target is out of reach.
    """
    p = [float(x) for x in p]
    w = [float(x) for x in w]
    cnt = [int(x) for x in cnt]
    prev_a = [int(x) for x in prev_a]
    prev_b = [int(x) for x in prev_b]
    m = len(p)
    take = np.zeros(m, dtype=np.int64)
    if target <= tol:
        return 0.0, take, 0
    # prefix capacities for the fractional (LP) bound
    cum_p = [0.0] * (m + 1)
    cum_w = [0.0] * (m + 1)
    for j in range(m):
        cum_p[j + 1] = cum_p[j] + p[j] * cnt[j]
        cum_w[j + 1] = cum_w[j] + w[j] * cnt[j]

    def lp_bound(j, r):
        if r <= tol:
            return 0.0
        need = cum_p[j] + r - tol
        if need > cum_p[m]:
            return math.inf
        t = bisect_left(cum_p, need, lo=j + 1) - 1
        return cum_w[t] - cum_w[j] + (need - cum_p[t]) * (w[t] / p[t])

    def first_k(j, r):
        return min(cnt[j], max(0, math.ceil((r - tol) / p[j])))

    def blocked(j, ks):
        a, b = prev_a[j], prev_b[j]
        return (a >= 0 and ks[a] < cnt[a]) or (b >= 0 and ks[b] < cnt[b])

    best = math.inf
    # greedy feasible completion as the initial incumbent
    r = target
    c = 0.0
    greedy = [0] * m
    for j in range(m):
        if r <= tol:
            break
        k = 0 if blocked(j, greedy) else first_k(j, r)
        greedy[j] = k
        r -= k * p[j]
        c += k * w[j]
    if r <= tol:
        best = c
        take[:] = greedy

    rem = [0.0] * m
    cost = [0.0] * m
    kk = [0] * m
    depth = 0
    rem[0] = target
    kk[0] = first_k(0, target)  # the first group has no predecessor
    nodes = 0
    while depth >= 0:
        nodes += 1
        if nodes > max_nodes:
            raise RuntimeError("cover search exceeded its node budget")
        k = kk[depth]
        if k < 0:
            depth -= 1
            if depth >= 0:
                kk[depth] -= 1
            continue
        r = rem[depth] - k * p[depth]
        c = cost[depth] + k * w[depth]
        if r <= tol:
            if c < best:
                best = c
                take[:] = 0
                take[:depth] = kk[:depth]
                take[depth] = k
            kk[depth] -= 1
            continue
        if depth + 1 == m:
            kk[depth] -= 1
            continue
        bound = c + lp_bound(depth + 1, r)
        if bound >= best * (1.0 - 1e-13):
            # the bound only grows as k decreases, so the level is exhausted
            depth -= 1
            if depth >= 0:
                kk[depth] -= 1
            continue
        depth += 1
        rem[depth] = r
        cost[depth] = c
        kk[depth] = 0 if blocked(depth, kk) else first_k(depth, r)
    return best, take, nodes
