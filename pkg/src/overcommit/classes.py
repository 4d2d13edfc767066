"""Capacity planning when jobs fall into a few statistical classes.

A class is a count of identical jobs described by ``(mu, b)`` in absolute
units, where ``b`` is already the dispersion the constraint variant uses.
Closed forms give a starting point; every answer is then confirmed by
evaluating the constraint exactly as the packers do (loads accumulated job
by job), so the planner and the packers never disagree at a boundary.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from overcommit.capacity import ConstraintSpec, LoadSummary, Shape, Variant, effective_load
from overcommit.workload import Job


@dataclass(frozen=True)
class JobClass:
    mu: float
    b: float
    count: int = 0
    upper: float = math.inf

    def __post_init__(self):
        if self.mu < 0 or self.b < 0:
            raise ValueError("mu and b must be non-negative")
        if self.count < 0:
            raise ValueError("count must be non-negative")

    def job(self, id=0) -> Job:
        return Job.from_stats(id, self.mu, self.b, self.upper)


@dataclass(frozen=True)
class MixPattern:
    counts: tuple
    uses: int = 0


def pattern_load(counts, classes, spec: ConstraintSpec) -> LoadSummary:
    load = LoadSummary()
    for c, n in zip(classes, counts):
        job = c.job()
        for _ in range(n):
            load = load.plus(job, spec)
    return load


def pattern_fits(counts, classes, spec: ConstraintSpec) -> bool:
    return effective_load(pattern_load(counts, classes, spec), spec) <= spec.capacity


def _largest_root(R, mu1, c, bb, D):
    """Largest real x with mu1*x + D*sqrt(bb*x + c) <= R (square-root shape)."""
    if R < 0 or D * math.sqrt(c) > R:
        return -1.0
    if mu1 == 0:
        return math.inf if bb == 0 else ((R / D) ** 2 - c) / bb
    if bb == 0 or D == 0:
        return (R - D * math.sqrt(c)) / mu1
    # (R - mu1 x)^2 = D^2 (bb x + c), smaller root
    lin = 2 * R * mu1 + D * D * bb
    disc = lin * lin - 4 * mu1 * mu1 * (R * R - D * D * c)
    return (lin - math.sqrt(max(disc, 0.0))) / (2 * mu1 * mu1)


def _closed_form(classes, fixed, spec):
    """Analytic guess for the free (first) class count given the others."""
    c1 = classes[0]
    v = spec.variant
    if v is Variant.NO_OVERCOMMIT:
        rest = sum(c.upper * n for c, n in zip(classes[1:], fixed))
        return (spec.capacity - rest) / c1.upper if c1.upper > 0 else math.inf
    D = spec.d
    R = spec.capacity - sum(c.mu * n for c, n in zip(classes[1:], fixed))
    if spec.shape is Shape.LINEAR:
        per = lambda c: c.mu + D * math.sqrt(c.b)
        room = spec.capacity - sum(per(c) * n for c, n in zip(classes[1:], fixed))
        return room / per(c1) if per(c1) > 0 else math.inf
    if spec.shape is Shape.SQRT:
        c = sum(cl.b * n for cl, n in zip(classes[1:], fixed))
        x = _largest_root(R, c1.mu, c, c1.b, D)
        if math.isfinite(c1.upper) and spec.clip:
            rest_up = sum(cl.upper * n for cl, n in zip(classes[1:], fixed))
            x = max(x, (spec.capacity - rest_up) / c1.upper)
        return x
    return None


def _search_free(classes, fixed, spec, guess, limit):
    """Integer-verified maximum of the free class count; -1 if even 0 fails."""
    counts = lambda n: (n,) + tuple(fixed)
    if not pattern_fits(counts(0), classes, spec):
        return -1
    if guess is None or not math.isfinite(guess):
        lo, hi = 0, 1
        while hi <= limit and pattern_fits(counts(hi), classes, spec):
            lo, hi = hi, hi * 2
        hi = min(hi, limit + 1)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if pattern_fits(counts(mid), classes, spec):
                lo = mid
            else:
                hi = mid
        return lo
    n = int(min(max(math.floor(guess), 0), limit))
    while n > 0 and not pattern_fits(counts(n), classes, spec):
        n -= 1
    while n < limit and pattern_fits(counts(n + 1), classes, spec):
        n += 1
    return n


def max_identical_jobs(mu: float, b: float, spec: ConstraintSpec, upper: float = math.inf,
                       limit: int = 10 ** 7) -> int:
    """Largest n such that n copies of the job fit one machine.

    For no-overcommit this is ``floor(V / upper)``.
    """
    if spec.variant is Variant.NO_OVERCOMMIT and not math.isfinite(upper):
        raise ValueError("no-overcommit needs a finite upper bound")
    cls = (JobClass(mu, b, 0, upper),)
    return max(_search_free(cls, (), spec, _closed_form(cls, (), spec), limit), 0)


def two_class_frontier(class1: JobClass, class2: JobClass, spec: ConstraintSpec,
                       n2_grid: Sequence[int], limit: int = 10 ** 7):
    """Rows ``(n2, max n1)``; ``max n1`` is None when ``n2`` jobs alone do not fit."""
    classes = (class1, class2)
    rows = []
    for n2 in n2_grid:
        n1 = _search_free(classes, (n2,), spec, _closed_form(classes, (n2,), spec), limit)
        rows.append((int(n2), None if n1 < 0 else n1))
    return rows


def maximal_patterns(classes: Sequence[JobClass], spec: ConstraintSpec, caps=None):
    """Pareto-maximal feasible count vectors, each entry capped by ``caps``."""
    classes = list(classes)
    k = len(classes)
    if caps is None:
        caps = [c.count for c in classes]
    caps = [min(int(cap), max_identical_jobs(c.mu, c.b, spec, c.upper)) for c, cap in zip(classes, caps)]
    if k == 0:
        return []
    # the first class is maximized for every choice of the others
    found = []
    for rest in itertools.product(*(range(caps[i] + 1) for i in range(1, k))):
        n0 = _search_free(classes, rest, spec, _closed_form(classes, rest, spec), caps[0])
        if n0 < 0:
            continue
        found.append((min(n0, caps[0]),) + tuple(rest))
    keep = []
    for p in found:
        if not any(q != p and all(a >= b for a, b in zip(q, p)) for q in found):
            keep.append(p)
    return sorted(set(keep), reverse=True)


@dataclass(frozen=True)
class CuttingStockSolution:
    machines: int
    patterns: tuple
    lp_bound: float

    def __iter__(self):
        return iter((self.machines, self.patterns))


def solve_cutting_stock(classes: Sequence[JobClass], spec: ConstraintSpec,
                        max_classes: int = 4) -> CuttingStockSolution:
    """Minimum machines covering every class count with feasible mix patterns."""
    classes = list(classes)
    if len(classes) > max_classes:
        raise ValueError(f"at most {max_classes} classes supported, got {len(classes)}")
    for i, c in enumerate(classes):
        if c.count > 0 and not pattern_fits((1,), (c,), spec):
            raise ValueError(f"class {i}: a single job does not fit an empty machine")
    demand = np.array([c.count for c in classes], dtype=float)
    if demand.sum() == 0:
        return CuttingStockSolution(0, (), 0.0)
    patterns = maximal_patterns(classes, spec)
    A = np.array(patterns, dtype=float).T  # classes x patterns
    cost = np.ones(A.shape[1])
    lp = optimize.linprog(cost, A_ub=-A, b_ub=-demand, bounds=(0, None), method="highs")
    res = optimize.milp(cost, constraints=optimize.LinearConstraint(A, lb=demand),
                        integrality=np.ones_like(cost), bounds=optimize.Bounds(0, np.inf))
    if not res.success:
        raise RuntimeError(f"covering IP failed: {res.message}")
    z = np.rint(res.x).astype(int)
    used = tuple(MixPattern(tuple(patterns[k]), int(z[k])) for k in range(len(z)) if z[k] > 0)
    return CuttingStockSolution(int(z.sum()), used, float(lp.fun))


def expand(classes: Sequence[JobClass]):
    """The concrete job list a class description stands for."""
    jobs, nid = [], 0
    for c in classes:
        for _ in range(c.count):
            jobs.append(c.job(nid))
            nid += 1
    return jobs
