"""Randomized approximation-ratio audits against the exact oracle."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from overcommit.bounds import audit_run, cost_of_set, sum_mu_plus_b
from overcommit.capacity import ConstraintSpec, Variant
from overcommit.offline import EXACT_CAP, exact_optimal, local_search
from overcommit.online import best_fit, first_fit
from overcommit.workload import Job

AUDITED = ("first-fit", "best-fit", "local-search")


def audit_spec(alpha=0.99, capacity=10.0, variant=Variant.GAUSSIAN, p=0.5):
    """Unclipped constraint, so the normalized theory applies verbatim."""
    return ConstraintSpec(variant, alpha, capacity, p=p, clip=False)


def denormalized_job(id, mu, b, spec: ConstraintSpec) -> Job:
    """Abstract job whose normalized statistics are ``(mu, b)`` under ``spec``."""
    v = spec.capacity
    return Job.from_stats(id, mu * v, b * (v / spec.d) ** (1.0 / spec.exponent))


def random_instance(rng, spec, max_jobs=EXACT_CAP):
    """Mixed instance: deterministic, mean-heavy and dispersion-heavy jobs."""
    n = int(rng.integers(1, max_jobs + 1))
    jobs = []
    for k in range(n):
        kind = rng.integers(3)
        if kind == 0:
            mu, b = rng.uniform(0.0, 0.7), 0.0
        elif kind == 1:
            mu, b = rng.uniform(0.1, 0.6), rng.uniform(0.0, 0.2) ** 2
        else:
            mu, b = rng.uniform(0.0, 0.3), rng.uniform(0.0, 0.6) ** 2
        if mu + b ** spec.exponent > 1.0:
            b = ((1.0 - mu) * rng.uniform(0.0, 1.0)) ** (1.0 / spec.exponent)
        jobs.append(denormalized_job(k, mu, b, spec))
    return jobs


@dataclass
class AuditReport:
    instances: int = 0
    checks: Counter = field(default_factory=Counter)
    violations: list = field(default_factory=list)
    worst_ratio: dict = field(default_factory=dict)

    @property
    def passed(self):
        return not self.violations

    def lines(self):
        out = [f"instances: {self.instances}"]
        for name in sorted(self.checks):
            out.append(f"  {name}: {self.checks[name]} checked")
        for alg in sorted(self.worst_ratio):
            out.append(f"  worst {alg} / OPT: {self.worst_ratio[alg]:.4f}")
        out.append(f"violations: {len(self.violations)}")
        out.extend(f"  {v}" for v in self.violations[:20])
        out.append("PASS" if self.passed else "FAIL")
        return out


def pack_for_audit(jobs, spec, algorithm):
    if algorithm == "first-fit":
        return first_fit(jobs, spec)
    if algorithm == "best-fit":
        return best_fit(jobs, spec)
    if algorithm == "local-search":
        return local_search(first_fit(jobs, spec), spec)
    raise ValueError(f"{algorithm!r} carries no oracle-checked guarantee")


def run_audit(seed=0, instances=500, max_jobs=EXACT_CAP, algorithms=AUDITED, spec=None) -> AuditReport:
    rng = np.random.default_rng(seed)
    spec = spec or audit_spec()
    report = AuditReport()
    for t in range(instances):
        jobs = random_instance(rng, spec, max_jobs)
        opt, _ = exact_optimal(jobs, spec, cap=max_jobs)
        report.instances += 1
        for alg in algorithms:
            a = pack_for_audit(jobs, spec, alg)
            a.check()
            if alg == "local-search" and a.stats["operations"] > len(jobs) ** 3:
                report.violations.append(f"instance {t}: local search used {a.stats['operations']} operations")
            res = audit_run(a, spec, oracle_opt=opt)
            report.worst_ratio[alg] = max(report.worst_ratio.get(alg, 0.0), a.n_machines / opt)
            for c in res.checks:
                if c.hypothesis_met:
                    report.checks[f"{alg}:{c.name}"] += 1
            report.violations.extend(f"instance {t}: {alg} {c.name} machines={c.machines} bound={c.bound:.4f}"
                                     for c in res.violations)
    return report


def lemma_counterexamples(rng, sets=100_000, max_size=8, p=0.5):
    """Random normalized sets violating ``Cost > 1 => sum(mu + b) > 3/4`` or ``Cost <= 1 => sum <= 1``."""
    bad = []
    for _ in range(sets):
        k = int(rng.integers(1, max_size + 1))
        mu = rng.uniform(0.0, 1.0 / k, k) * rng.uniform(0.2, 1.5)
        b = (rng.uniform(0.0, 1.0 / k, k) * rng.uniform(0.2, 1.5)) ** 2 * k
        pairs = list(zip(mu.tolist(), b.tolist()))
        cost, s = cost_of_set(pairs, p), sum_mu_plus_b(pairs)
        if (cost > 1.0 and s <= 0.75) or (cost <= 1.0 and s > 1.0):
            bad.append((pairs, cost, s))
    return bad

