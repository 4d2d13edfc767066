# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.  Must stay bit-for-bit in step with _kernels_py."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, log1p, INFINITY

cnp.import_array()

DEF UPPER = 0
DEF SQRT = 1
DEF POWER = 2
DEF LOG = 3

DEF FIRST_FIT = 0
DEF BEST_FIT = 1
DEF NEXT_FIT = 2


cdef inline double _eff(double sm, double sb, double su, int shape, double d,
                        double p, bint clip) nogil:
    cdef double raw
    if shape == UPPER:
        raw = su
    elif shape == SQRT:
        raw = sm + d * sqrt(sb)
    elif shape == POWER:
        raw = sm + d * pow(sb, p)
    elif shape == LOG:
        raw = sm + d * log1p(sb)
    else:
        raw = sm + sb
    if clip and raw > su:
        return su
    return raw


def pack_online(double[::1] mu, double[::1] bq, double[::1] upper, int shape,
                double d, double p, double capacity, bint clip, int policy,
                Py_ssize_t shard=0):
    """Place jobs in arrival order; returns ``(machine_of_job, n_machines)``.

    ``n_machines`` is ``-(j + 1)`` when job ``j`` does not fit an empty machine.
    """
    cdef Py_ssize_t n = mu.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef double[::1] sm = np.zeros(max(n, 1))
    cdef double[::1] sb = np.zeros(max(n, 1))
    cdef double[::1] su = np.zeros(max(n, 1))
    cdef Py_ssize_t nm = 0, j, i, start, chosen, err = -1
    cdef double e, slack, best

    with nogil:
        for j in range(n):
            chosen = -1
            best = INFINITY
            if policy == NEXT_FIT:
                start = nm - 1 if nm > 0 else 0
            elif shard > 0 and nm > shard:
                start = nm - shard
            else:
                start = 0
            for i in range(start, nm):
                e = _eff(sm[i] + mu[j], sb[i] + bq[j], su[i] + upper[j], shape, d, p, clip)
                if e <= capacity:
                    if policy != BEST_FIT:
                        chosen = i
                        break
                    slack = capacity - e
                    if slack < best:
                        best = slack
                        chosen = i
            if chosen < 0:
                e = _eff(mu[j], bq[j], upper[j], shape, d, p, clip)
                if not e <= capacity:
                    err = j
                    break
                chosen = nm
                nm += 1
            sm[chosen] += mu[j]
            sb[chosen] += bq[j]
            su[chosen] += upper[j]
            out[j] = chosen
    if err >= 0:
        return out_arr, -(err + 1)
    return out_arr, nm


def subset_feasibility(double[::1] mu, double[::1] bq, double[::1] upper, int shape,
                       double d, double p, double capacity, bint clip):
    """Feasibility flag for every subset bitmask of up to ~25 jobs."""
    cdef Py_ssize_t n = mu.shape[0]
    cdef Py_ssize_t full = 1 << n
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] feas_arr = np.zeros(full, dtype=np.uint8)
    cdef cnp.uint8_t[::1] feas = feas_arr
    cdef double[::1] sm = np.zeros(full)
    cdef double[::1] sb = np.zeros(full)
    cdef double[::1] su = np.zeros(full)
    cdef Py_ssize_t m, rest, k = -1
    feas[0] = 1
    with nogil:
        for m in range(1, full):
            if m == (<Py_ssize_t>1 << (k + 1)):
                k += 1
            rest = m ^ (<Py_ssize_t>1 << k)
            sm[m] = sm[rest] + mu[k]
            sb[m] = sb[rest] + bq[k]
            su[m] = su[rest] + upper[k]
            feas[m] = _eff(sm[m], sb[m], su[m], shape, d, p, clip) <= capacity
    return feas_arr


def min_partition(cnp.uint8_t[::1] feas, Py_ssize_t n):
    """Minimum number of feasible blocks covering all ``n`` jobs.

    Returns ``(count, choice)`` where ``choice[mask]`` is the block holding the
    lowest job of ``mask`` in an optimal partition; count is -1 if none exists.
    """
    cdef Py_ssize_t full = 1 << n
    cdef cnp.ndarray[cnp.int64_t, ndim=1] dp_arr = np.full(full, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] choice_arr = np.zeros(full, dtype=np.int64)
    cdef cnp.int64_t[::1] dp = dp_arr
    cdef cnp.int64_t[::1] choice = choice_arr
    cdef Py_ssize_t mask, low, rest, t, s
    cdef cnp.int64_t cand, best
    dp[0] = 0
    with nogil:
        for mask in range(1, full):
            low = mask & (-mask)
            rest = mask ^ low
            best = -1
            t = rest
            while True:
                s = t | low
                if feas[s] and dp[mask ^ s] >= 0:
                    cand = dp[mask ^ s] + 1
                    if best < 0 or cand < best:
                        best = cand
                        choice[mask] = s
                if t == 0:
                    break
                t = (t - 1) & rest
            dp[mask] = best
    return int(dp_arr[full - 1]), choice_arr


def machine_violations(double[:, ::1] usage, cnp.int64_t[::1] machine_of_job,
                       Py_ssize_t n_machines, double capacity):
    """Count, per machine, the sample rows whose total usage exceeds capacity."""
    cdef Py_ssize_t samples = usage.shape[0], n = usage.shape[1], s, j, i
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts_arr = np.zeros(n_machines, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef double[::1] tot = np.zeros(max(n_machines, 1))
    with nogil:
        for s in range(samples):
            for i in range(n_machines):
                tot[i] = 0.0
            for j in range(n):
                tot[machine_of_job[j]] += usage[s, j]
            for i in range(n_machines):
                if tot[i] > capacity:
                    counts[i] += 1
    return counts_arr
