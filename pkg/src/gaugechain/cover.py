"""Exact minimum-weight cover over grouped items.

Solves ``min sum_j k_j w_j`` subject to ``sum_j k_j p_j >= target`` with
``0 <= k_j <= count_j`` integer.  The search kernel is compiled when the
extension is available and falls back to pure Python otherwise; set
``GAUGECHAIN_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _cover_py

try:
    if os.environ.get("GAUGECHAIN_PURE_PYTHON"):
        raise ImportError
    from . import _cover as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
MAX_NODES = 50_000_000
COVER_TOL = 1e-12
RATIO_RTOL = 1e-12


def _kernel(backend: str | None):
    name = BACKEND if backend is None else backend
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled cover kernel is not built")
        return _compiled.search
    if name == "python":
        return _cover_py.search
    raise ValueError(f"unknown backend {name!r}")


def min_weight_cover(p, w, counts, target: float, tol: float = COVER_TOL, backend: str | None = None,
                     max_nodes: int = MAX_NODES) -> tuple:
    """Return ``(value, take)`` with ``take[j]`` the number of items taken from group ``j``.

    Groups with ``p <= 0`` are never taken and zero-weight groups are taken
    whole.  ``value`` is ``inf`` if the target cannot be reached.
    """
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    counts = np.asarray(counts, dtype=np.int64)
    if np.any(w < 0) or np.any(counts < 0):
        raise ValueError("weights and counts must be nonnegative")
    take = np.zeros(len(p), dtype=np.int64)
    free = (w == 0) & (p > 0)
    take[free] = counts[free]
    need = target - float(np.dot(p[free], counts[free]))
    live = np.flatnonzero((p > 0) & (w > 0) & (counts > 0))
    if need <= tol:
        return 0.0, take
    if live.size == 0:
        return float("inf"), take
    order = live[_search_order(p[live], w[live])]
    ps, ws, cs = p[order], w[order], counts[order]
    lo, hi = _reduced_cost_bounds(ps, ws, cs, need, tol)
    if lo is None:
        return float("inf"), take
    prev_a, prev_b = _class_predecessors(ps, ws, cs, lo, hi)
    core = np.flatnonzero(hi > lo)
    rest = need - float(np.dot(ps, lo))
    best, sub, _ = _kernel(backend)(ps[core], ws[core], hi[core] - lo[core], prev_a[core], prev_b[core],
                                    rest, tol, max_nodes)
    if np.isfinite(best):
        chosen = lo.copy()
        chosen[core] += sub
        take[order] = chosen
        best = float(np.dot(ws, chosen))
    return float(best), take


def _class_predecessors(p, w, cnt, lo, hi, rtol: float = 1e-12) -> tuple:
    """Predecessor links for the exchange argument, in core indices; may tighten ``hi`` in place.

    Among groups of equal weight some optimal cover takes the heavier masses
    first, and among equal masses the lighter weights first.  In ratio order
    both predecessors come earlier, so group ``j`` is usable only once its
    predecessor is taken whole.  A predecessor fixed below its count blocks
    ``j`` outright.
    """
    m = len(p)
    core_index = np.cumsum(hi > lo) - 1
    links = []
    for key in (w, p):
        prev = np.full(m, -1, dtype=np.int64)
        last = {}
        scale = max(float(np.abs(key).max()), 1e-300)
        # bucket keys to rtol so rounding-level differences share a class
        labels = np.round(key / (rtol * scale)).astype(np.int64)
        for j in range(m):
            i = last.get(labels[j])
            last[labels[j]] = j
            if i is None:
                continue
            if hi[i] > lo[i]:
                prev[j] = core_index[i]
            elif hi[i] < cnt[i]:
                hi[j] = lo[j]
            # predecessor fixed whole: no constraint
        links.append(prev)
    return links[0], links[1]


def _incumbent(p, w, cnt, need, tol) -> float:
    """Cost of the better of two feasible greedy covers (``inf`` if none exists)."""
    cap = np.cumsum(p * cnt)
    if cap[-1] < need - tol:
        return float("inf")
    s = int(np.searchsorted(cap, need - tol))
    base_w = float(np.dot(w[:s], cnt[:s]))
    r = need - (cap[s - 1] if s else 0.0)
    # close the gap with whole units of a single later group
    k = np.ceil(np.maximum(r - tol, 0.0) / p[s:])
    ok = k <= cnt[s:]
    best = base_w + float(np.min(np.where(ok, k * w[s:], np.inf)))
    return best


def _reduced_cost_bounds(p, w, cnt, need, tol, slack: float = 1e-9):
    """Per-group bounds ``lo <= k <= hi`` implied by the LP dual and a greedy incumbent.

    Any cover costs at least ``z_LP + sum_{j > s} rc_j k_j + sum_{j < s} |rc_j| (cnt_j - k_j)``
    with ``rc_j = w_j - lambda p_j`` at the critical ratio ``lambda``; groups whose
    reduced cost exceeds the incumbent gap are fixed.  ``slack`` widens the gap
    so that rounding never removes an optimal cover.
    """
    upper = _incumbent(p, w, cnt, need, tol)
    if not np.isfinite(upper):
        return None, None
    cap = np.cumsum(p * cnt)
    s = int(np.searchsorted(cap, need - tol))
    lam = w[s] / p[s]
    prev = cap[s - 1] if s else 0.0
    z_lp = float(np.dot(w[:s], cnt[:s])) + (need - tol - prev) * lam
    gap = upper - z_lp + slack * max(abs(upper), 1e-300)
    rc = w - lam * p
    lo = np.zeros_like(cnt)
    hi = cnt.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = rc > 0
        hi[pos] = np.minimum(cnt[pos], np.floor(gap / rc[pos]).astype(np.int64))
        neg = rc < 0
        lo[neg] = np.maximum(0, cnt[neg] - np.floor(gap / -rc[neg]).astype(np.int64))
    return lo, hi


def _search_order(p: np.ndarray, w: np.ndarray, rtol: float = RATIO_RTOL) -> np.ndarray:
    """Ratio ``p/w`` descending; ratios within ``rtol`` form one tie class ordered by mass.

    Snapping rounding-level ratio differences keeps the depth-first search on
    the large items first, which matters when nearly all ratios coincide.
    """
    ratio = p / w
    by_ratio = np.argsort(-ratio, kind="stable")
    r = ratio[by_ratio]
    cls = np.zeros(len(r), dtype=np.int64)
    if len(r) > 1:
        cls[1:] = np.cumsum((r[:-1] - r[1:]) > rtol * r[:-1])
    tie_class = np.empty(len(r), dtype=np.int64)
    tie_class[by_ratio] = cls
    return np.lexsort((-p, tie_class))


def group_items(p, w, rtol: float = 1e-12) -> tuple:
    """Merge items whose ``(p, w)`` agree to ``rtol``; returns ``(p, w, counts)``."""
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    if p.size == 0:
        return p, w, np.zeros(0, dtype=np.int64)
    order = np.lexsort((w, p))
    ps, ws = p[order], w[order]
    scale_p = max(np.abs(p).max(), 1e-300)
    scale_w = max(np.abs(w).max(), 1e-300)
    new = np.ones(len(ps), dtype=bool)
    new[1:] = (np.abs(np.diff(ps)) > rtol * scale_p) | (np.abs(np.diff(ws)) > rtol * scale_w)
    starts = np.flatnonzero(new)
    counts = np.diff(np.append(starts, len(ps)))
    # group representatives: mean over members keeps totals exact to rounding
    gp = np.add.reduceat(ps, starts) / counts
    gw = np.add.reduceat(ws, starts) / counts
    return gp, gw, counts.astype(np.int64)
