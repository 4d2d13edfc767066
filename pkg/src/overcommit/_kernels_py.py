"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Same arithmetic in the same order, so both backends return identical
results for identical inputs.
"""

import math

import numpy as np

UPPER, SQRT, POWER, LOG = 0, 1, 2, 3
FIRST_FIT, BEST_FIT, NEXT_FIT = 0, 1, 2


def _eff(sm, sb, su, shape, d, p, clip):
    if shape == UPPER:
        raw = su
    elif shape == SQRT:
        raw = sm + d * math.sqrt(sb)
    elif shape == POWER:
        raw = sm + d * math.pow(sb, p)
    elif shape == LOG:
        raw = sm + d * math.log1p(sb)
    else:
        raw = sm + sb
    if clip and raw > su:
        return su
    return raw


def pack_online(mu, bq, upper, shape, d, p, capacity, clip, policy, shard=0):
    mu, bq, upper = (np.asarray(a, dtype=float).tolist() for a in (mu, bq, upper))
    n = len(mu)
    out = np.empty(n, dtype=np.int64)
    sm, sb, su = [], [], []
    for j in range(n):
        m, b, u = mu[j], bq[j], upper[j]
        nm = len(sm)
        if policy == NEXT_FIT:
            start = nm - 1 if nm > 0 else 0
        elif shard > 0 and nm > shard:
            start = nm - shard
        else:
            start = 0
        chosen, best = -1, math.inf
        for i in range(start, nm):
            e = _eff(sm[i] + m, sb[i] + b, su[i] + u, shape, d, p, clip)
            if e <= capacity:
                if policy != BEST_FIT:
                    chosen = i
                    break
                slack = capacity - e
                if slack < best:
                    best, chosen = slack, i
        if chosen < 0:
            if not _eff(m, b, u, shape, d, p, clip) <= capacity:
                return out, -(j + 1)
            chosen = nm
            sm.append(0.0)
            sb.append(0.0)
            su.append(0.0)
        sm[chosen] += m
        sb[chosen] += b
        su[chosen] += u
        out[j] = chosen
    return out, len(sm)


def subset_feasibility(mu, bq, upper, shape, d, p, capacity, clip):
    mu, bq, upper = (np.asarray(a, dtype=float).tolist() for a in (mu, bq, upper))
    n = len(mu)
    full = 1 << n
    feas = np.zeros(full, dtype=np.uint8)
    sm, sb, su = [0.0] * full, [0.0] * full, [0.0] * full
    feas[0] = 1
    k = -1
    for m in range(1, full):
        if m == 1 << (k + 1):
            k += 1
        rest = m ^ (1 << k)
        sm[m] = sm[rest] + mu[k]
        sb[m] = sb[rest] + bq[k]
        su[m] = su[rest] + upper[k]
        feas[m] = _eff(sm[m], sb[m], su[m], shape, d, p, clip) <= capacity
    return feas


def min_partition(feas, n):
    full = 1 << n
    feas = feas.tolist()
    dp = [-1] * full
    choice = [0] * full
    dp[0] = 0
    for mask in range(1, full):
        low = mask & -mask
        rest = mask ^ low
        best = -1
        t = rest
        while True:
            s = t | low
            if feas[s]:
                prev = dp[mask ^ s]
                if prev >= 0 and (best < 0 or prev + 1 < best):
                    best = prev + 1
                    choice[mask] = s
            if t == 0:
                break
            t = (t - 1) & rest
        dp[mask] = best
    return dp[full - 1], np.asarray(choice, dtype=np.int64)


def machine_violations(usage, machine_of_job, n_machines, capacity):
    usage = np.ascontiguousarray(usage, dtype=float)
    tot = np.zeros((usage.shape[0], n_machines))
    # accumulate job by job so every row sums in ascending job order
    for j, i in enumerate(np.asarray(machine_of_job).tolist()):
        tot[:, i] += usage[:, j]
    return np.count_nonzero(tot > capacity, axis=0).astype(np.int64)
