# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled branch and bound for the bounded minimum-weight cover problem.

Same algorithm and visiting order as ``_cover_py.search``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, INFINITY

cnp.import_array()


cdef inline Py_ssize_t _bisect_left(double[::1] a, double x, Py_ssize_t lo, Py_ssize_t hi) nogil:
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline double _lp_bound(double[::1] cum_p, double[::1] cum_w, double[::1] p, double[::1] w,
                             Py_ssize_t m, Py_ssize_t j, double r, double tol) nogil:
    cdef double need
    cdef Py_ssize_t t
    if r <= tol:
        return 0.0
    need = cum_p[j] + r - tol
    if need > cum_p[m]:
        return INFINITY
    t = _bisect_left(cum_p, need, j + 1, m + 1) - 1
    return cum_w[t] - cum_w[j] + (need - cum_p[t]) * (w[t] / p[t])


cdef inline long long _first_k(double[::1] p, long long[::1] cnt, Py_ssize_t j, double r, double tol) nogil:
    cdef double q = ceil((r - tol) / p[j])
    cdef long long k
    if q < 0:
        q = 0
    if q > cnt[j]:
        return cnt[j]
    k = <long long> q
    return k


cdef inline bint _blocked(long long[::1] prev_a, long long[::1] prev_b, long long[::1] cnt,
                          long long[::1] ks, Py_ssize_t j) nogil:
    cdef long long a = prev_a[j]
    cdef long long b = prev_b[j]
    if a >= 0 and ks[a] < cnt[a]:
        return True
    if b >= 0 and ks[b] < cnt[b]:
        return True
    return False


def search(p_in, w_in, cnt_in, prev_a_in, prev_b_in, double target, double tol, long long max_nodes):
    cdef double[::1] p = np.ascontiguousarray(p_in, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef long long[::1] cnt = np.ascontiguousarray(cnt_in, dtype=np.int64)
    cdef long long[::1] prev_a = np.ascontiguousarray(prev_a_in, dtype=np.int64)
    cdef long long[::1] prev_b = np.ascontiguousarray(prev_b_in, dtype=np.int64)
    cdef Py_ssize_t m = p.shape[0]
    take_arr = np.zeros(m, dtype=np.int64)
    cdef long long[::1] take = take_arr
    if target <= tol:
        return 0.0, take_arr, 0

    cum_p_arr = np.zeros(m + 1)
    cum_w_arr = np.zeros(m + 1)
    cdef double[::1] cum_p = cum_p_arr
    cdef double[::1] cum_w = cum_w_arr
    cdef Py_ssize_t j
    for j in range(m):
        cum_p[j + 1] = cum_p[j] + p[j] * cnt[j]
        cum_w[j + 1] = cum_w[j] + w[j] * cnt[j]

    cdef double best = INFINITY
    cdef double r = target
    cdef double c = 0.0
    cdef long long k
    greedy_arr = np.zeros(m, dtype=np.int64)
    cdef long long[::1] greedy = greedy_arr
    for j in range(m):
        if r <= tol:
            break
        if _blocked(prev_a, prev_b, cnt, greedy, j):
            k = 0
        else:
            k = _first_k(p, cnt, j, r, tol)
        greedy[j] = k
        r -= k * p[j]
        c += k * w[j]
    if r <= tol:
        best = c
        take[:] = greedy

    rem_arr = np.zeros(m)
    cost_arr = np.zeros(m)
    kk_arr = np.zeros(m, dtype=np.int64)
    cdef double[::1] rem = rem_arr
    cdef double[::1] cost = cost_arr
    cdef long long[::1] kk = kk_arr
    cdef Py_ssize_t depth = 0
    cdef Py_ssize_t i
    cdef long long nodes = 0
    cdef double bound
    rem[0] = target
    kk[0] = _first_k(p, cnt, 0, target, tol)
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
                for i in range(m):
                    take[i] = 0
                for i in range(depth):
                    take[i] = kk[i]
                take[depth] = k
            kk[depth] -= 1
            continue
        if depth + 1 == m:
            kk[depth] -= 1
            continue
        bound = c + _lp_bound(cum_p, cum_w, p, w, m, depth + 1, r, tol)
        if bound >= best * (1.0 - 1e-13):
            depth -= 1
            if depth >= 0:
                kk[depth] -= 1
            continue
        depth += 1
        rem[depth] = r
        cost[depth] = c
        if _blocked(prev_a, prev_b, cnt, kk, depth):
            kk[depth] = 0
        else:
            kk[depth] = _first_k(p, cnt, depth, r, tol)
    return best, take_arr, nodes
