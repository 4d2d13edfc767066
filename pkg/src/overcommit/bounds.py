"""Lower bounds on the optimum, overcommitment metrics and the ratio auditor.

Theory checks run in normalized units: capacity 1 and risk multiplier 1,
obtained from ``mu / V`` and ``b * (D / V) ** (1 / p)``.  In those units a set
is feasible iff ``Cost = sum(mu) + (sum(b)) ** p <= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from overcommit.capacity import (ConstraintSpec, LoadSummary, Shape, b_value, d_of_alpha,
                                 effective_load)

LAZY_ALGORITHMS = frozenset({"first-fit", "best-fit"})
_TOL = 1e-9


def normalize(jobs, spec: ConstraintSpec):
    """``[(mu, b)]`` in units where the capacity and D(alpha) are both 1."""
    if spec.shape not in (Shape.SQRT, Shape.POWER):
        raise ValueError(f"no normalized form for the {spec.variant.value} constraint")
    v = spec.capacity
    scale = (d_of_alpha(spec) / v) ** (1.0 / spec.exponent)
    return [(j.mean / v, b_value(j, spec) * scale) for j in jobs]


def cost_of_set(pairs, p: float = 0.5) -> float:
    """Normalized ``sum(mu) + sum(b) ** p``; a set is feasible iff this is <= 1."""
    pairs = list(pairs)
    if not pairs:
        return 0.0
    return math.fsum(m for m, _ in pairs) + math.fsum(b for _, b in pairs) ** p


def sum_mu_plus_b(pairs) -> float:
    return math.fsum(m + b for m, b in pairs)


def f_value(a: float, b: float) -> float:
    return (2.0 * a + b + math.sqrt(b * (4.0 * a + b))) / 2.0


def f_bound(pairs) -> float:
    """Sum of ``f(mu_j, b_j)``; never exceeds the optimum machine count."""
    return math.fsum(f_value(m, b) for m, b in pairs)


def f_of_p(p: float) -> float:
    return 1.0 - (1.0 - p) * p ** (1.0 / p - 1.0)


def pnorm_ratio_bound(p: float) -> float:
    """Approximation factor of any lazy packer under the p-power buffer."""
    if not 0.5 <= p <= 1.0:
        raise ValueError("p must lie in [0.5, 1]")
    return 2.0 / f_of_p(p)


@dataclass(frozen=True)
class OvercommitReport:
    b_alpha: int
    b_one: int
    ocf_alpha: float
    ocf_one: float
    savings: float


def overcommit_report(b_alpha: int, b_one: int, total_upper: float, capacity: float) -> OvercommitReport:
    if b_alpha < 1 or b_one < 1:
        raise ValueError("machine counts must be at least 1")
    return OvercommitReport(b_alpha, b_one, total_upper / (capacity * b_alpha),
                            total_upper / (capacity * b_one), 1.0 - b_alpha / b_one)


@dataclass(frozen=True)
class TheoremCheck:
    name: str
    hypothesis_met: bool
    bound: float
    machines: int
    holds: bool


@dataclass(frozen=True)
class RatioAudit:
    algorithm: str
    machines: int
    lower_bound: float
    bound_source: str
    ratio: float
    checks: tuple = ()
    epsilon: float = math.nan
    delta: float = math.nan
    clip_binds: bool = False

    @property
    def violations(self):
        return [c for c in self.checks if c.hypothesis_met and not c.holds]

    @property
    def passed(self):
        return not self.violations

    @property
    def flags(self):
        """Compact ``name:ok|FAIL`` string of the checks whose hypothesis held."""
        return ";".join(f"{c.name}:{'ok' if c.holds else 'FAIL'}"
                        for c in self.checks if c.hypothesis_met)


def machine_epsilon(groups, p=0.5) -> float:
    """Smallest epsilon such that every machine is epsilon-full."""
    if not groups:
        return 0.0
    return max(0.0, 1.0 - min(cost_of_set(g, p) for g in groups))


def machine_delta(groups) -> float:
    """Smallest delta such that every machine is delta-homogeneous (ratios b/mu)."""
    worst = 0.0
    for g in groups:
        ratios = [math.inf if m == 0 else b / m for m, b in g]
        lo, hi = min(ratios), max(ratios)
        if math.isinf(hi):
            if not math.isinf(lo):
                return math.inf
            continue
        if lo == 0.0:
            if hi > 0.0:
                return math.inf
            continue
        worst = max(worst, hi / lo - 1.0)
    return worst


def lazy_pairs_hold(groups) -> bool:
    """Every two machines of a lazy packing jointly carry more than 3/4 of mu + b."""
    sums = sorted(sum_mu_plus_b(g) for g in groups)
    # the two lightest machines form the weakest pair
    return len(sums) < 2 or sums[0] + sums[1] > 0.75


def audit_run(assignment, spec: Optional[ConstraintSpec] = None,
              oracle_opt: Optional[int] = None, algorithm: Optional[str] = None) -> RatioAudit:
    """Check every applicable approximation guarantee against ``assignment``.

    Bounds derived from ``sum(mu + b)`` and ``sum f`` hold for the unclipped
    constraint only, so they are skipped when clipping let some machine pass
    that the unclipped constraint would reject.
    """
    spec = spec or assignment.spec
    algorithm = algorithm or assignment.algorithm
    m = assignment.n_machines
    p = spec.exponent
    groups = [normalize(assignment.machine_jobs(mc), spec) for mc in assignment.machines]
    pairs = [x for g in groups for x in g]

    clip_binds = False
    if spec.clip:
        raw = ConstraintSpec(spec.variant, spec.alpha, spec.capacity, spec.p, spec.use_range, clip=False)
        clip_binds = any(effective_load(LoadSummary.of(assignment.machine_jobs(mc), raw), raw)
                         > spec.capacity for mc in assignment.machines)
    sqrt_form = p == 0.5
    lb_mub = sum_mu_plus_b(pairs) if sqrt_form else 0.0
    lb_f = f_bound(pairs) if sqrt_form else 0.0
    candidates = [(1.0 if m else 0.0, "trivial")]
    if not clip_binds:
        candidates += [(lb_mub, "sum-mu-plus-b"), (lb_f, "sum-f")]
    if oracle_opt is not None:
        candidates = [(float(oracle_opt), "oracle")]
    lower, source = max(candidates, key=lambda t: t[0])
    ratio = m / lower if lower > 0 else (1.0 if m == 0 else math.inf)

    eps = machine_epsilon(groups, p)
    delta = machine_delta(groups)
    lazy = algorithm in LAZY_ALGORITHMS
    opt = oracle_opt
    checks = []

    def add(name, hyp, bound):
        checks.append(TheoremCheck(name, bool(hyp), bound, m, (not hyp) or m <= bound + _TOL))

    if sqrt_form:
        checks.append(TheoremCheck("lazy-pairs", lazy, 0.75, m, (not lazy) or lazy_pairs_hold(groups)))
        add("lazy-8/3", lazy and opt is not None, 8.0 / 3.0 * (opt or 0))
        add("full-4/3+3eps", lazy and eps <= 0.3 and not clip_binds,
            lb_mub / (0.75 - eps) if eps < 0.75 else math.inf)
        add("first-fit-9/4", algorithm == "first-fit" and opt is not None, 2.25 * (opt or 0) + 1)
        k = min((len(mc.jobs) for mc in assignment.machines), default=0)
        add("first-fit-K-jobs", algorithm == "first-fit" and opt is not None and k >= 1,
            4.0 / 3.0 * (1.0 + 1.0 / max(k, 1)) * (opt or 0))
        add("full-homogeneous", eps < 1.0 and delta < 1.0 and not clip_binds,
            lb_f / ((1.0 - eps) ** 2 * (1.0 - delta)) + 1.0 if eps < 1.0 and delta < 1.0 else math.inf)
    else:
        add("lazy-2/f(p)", lazy and opt is not None, pnorm_ratio_bound(p) * (opt or 0))
    add("local-search-2opt+11", algorithm == "local-search" and opt is not None, 2.0 * (opt or 0) + 11)
    if opt is not None:
        checks.append(TheoremCheck("opt-le-machines", True, float(opt), m, opt <= m))
        if sqrt_form and not clip_binds:
            checks.append(TheoremCheck("opt-ge-sum-mu-plus-b", True, lb_mub, m, opt + _TOL >= lb_mub))
            checks.append(TheoremCheck("opt-ge-sum-f", True, lb_f, m, opt + _TOL >= lb_f))
    return RatioAudit(algorithm, m, lower, source, ratio, tuple(checks), eps, delta, clip_binds)
