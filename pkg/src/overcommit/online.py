"""Online packing: First-Fit, Best-Fit, Next-Fit and ratio-bucketed First-Fit.

Jobs are placed one at a time, immediately and permanently.  The placement
loops run in :mod:`overcommit.kernels`; this module wraps their output in
:class:`Assignment` objects.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from overcommit import kernels
from overcommit.capacity import (ConstraintSpec, LoadSummary, b_value, d_of_alpha,
                                 effective_load, job_arrays)
from overcommit.workload import Job


class OversizedJobError(ValueError):
    def __init__(self, job, spec):
        self.job = job
        super().__init__(f"job {job.id} (upper {job.upper:g}, mean {job.mean:g}) cannot fit "
                         f"an empty machine of capacity {spec.capacity:g}")


class InfeasibleAssignmentError(ValueError):
    pass


@dataclass
class Machine:
    id: int
    load: LoadSummary = field(default_factory=LoadSummary)
    jobs: list = field(default_factory=list)


@dataclass
class Assignment:
    """A packing of jobs onto machines, machines listed in purchase order."""

    machines: list
    job_to_machine: dict
    jobs: dict
    spec: ConstraintSpec
    algorithm: str = ""
    arrival: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def n_machines(self):
        return len(self.machines)

    def machine_jobs(self, machine: Machine):
        return [self.jobs[j] for j in machine.jobs]

    def machine_index(self):
        """Array mapping the position of each job in ``arrival`` to a machine slot."""
        slot = {m.id: k for k, m in enumerate(self.machines)}
        return np.array([slot[self.job_to_machine[j]] for j in self.arrival], dtype=np.int64)

    def check(self):
        """Raise if any job is unassigned, doubly assigned, or a machine is overfull."""
        seen = set()
        for m in self.machines:
            if not m.jobs:
                raise InfeasibleAssignmentError(f"machine {m.id} is empty")
            for j in m.jobs:
                if j in seen:
                    raise InfeasibleAssignmentError(f"job {j} assigned twice")
                seen.add(j)
                if self.job_to_machine.get(j) != m.id:
                    raise InfeasibleAssignmentError(f"job {j} map disagrees with machine {m.id}")
            if effective_load(LoadSummary.of(self.machine_jobs(m), self.spec), self.spec) > self.spec.capacity:
                raise InfeasibleAssignmentError(f"machine {m.id} exceeds capacity")
        if seen != set(self.jobs):
            raise InfeasibleAssignmentError("some jobs are unassigned")

    @classmethod
    def from_groups(cls, groups, spec, algorithm="", arrival=None):
        """Build from an ordered list of job lists (one per machine)."""
        machines, j2m, jobs = [], {}, {}
        for i, group in enumerate(groups):
            load = LoadSummary.of(group, spec)
            machines.append(Machine(i, load, [j.id for j in group]))
            for j in group:
                j2m[j.id] = i
                jobs[j.id] = j
        if arrival is None:
            arrival = [j.id for g in groups for j in g]
        return cls(machines, j2m, jobs, spec, algorithm, list(arrival))


def _from_kernel(jobs, slots, n_machines, spec, algorithm):
    groups = [[] for _ in range(n_machines)]
    for job, s in zip(jobs, slots.tolist()):
        groups[s].append(job)
    return Assignment.from_groups(groups, spec, algorithm, arrival=[j.id for j in jobs])


def _run(jobs, spec, policy, name, shard=0):
    jobs = list(jobs)
    mu, bq, up = job_arrays(jobs, spec)
    d = d_of_alpha(spec)
    slots, n = kernels.pack_online(mu, bq, up, int(spec.shape), d, float(spec.exponent),
                                   float(spec.capacity), bool(spec.clip), policy, shard)
    if n < 0:
        raise OversizedJobError(jobs[-n - 1], spec)
    return _from_kernel(jobs, slots, n, spec, name)


def first_fit(jobs: Sequence[Job], spec: ConstraintSpec, shard: int = 0) -> Assignment:
    """Lowest-id machine that fits; a new machine only when none does."""
    return _run(jobs, spec, kernels.FIRST_FIT, "first-fit", shard)


def best_fit(jobs: Sequence[Job], spec: ConstraintSpec, shard: int = 0) -> Assignment:
    """Fitting machine with the least slack ``V - effective load``; ties to lowest id.

    With ``shard > 0`` only the ``shard`` most recently purchased machines are
    candidates.
    """
    return _run(jobs, spec, kernels.BEST_FIT, "best-fit", shard)


def next_fit(jobs: Sequence[Job], spec: ConstraintSpec) -> Assignment:
    """Only the newest machine is a candidate.  Not lazy."""
    return _run(jobs, spec, kernels.NEXT_FIT, "next-fit")


@dataclass(frozen=True)
class BucketingPolicy:
    """Buckets over the ratio ``r_j = b_j / mu_j``.

    Bucket ``k`` holds ratios in ``[boundaries[k-1], boundaries[k])``; jobs with
    ``mu_j = 0`` (ratio ``+inf``) get a bucket of their own.
    """

    boundaries: tuple = ()

    def __post_init__(self):
        b = tuple(float(x) for x in self.boundaries)
        if any(x <= 0 for x in b) or any(y <= x for x, y in zip(b, b[1:])):
            raise ValueError("boundaries must be positive and strictly increasing")
        object.__setattr__(self, "boundaries", b)

    @classmethod
    def geometric(cls, low, high, factor=2.0):
        if low <= 0 or high <= low or factor <= 1:
            raise ValueError("need 0 < low < high and factor > 1")
        edges, x = [], low
        while x < high * (1 + 1e-12):
            edges.append(x)
            x *= factor
        return cls(tuple(edges))

    @property
    def n_buckets(self):
        return len(self.boundaries) + 2

    def bucket_of(self, ratio):
        if math.isinf(ratio):
            return len(self.boundaries) + 1
        return bisect.bisect_right(self.boundaries, ratio)


def ratio(job: Job, spec: ConstraintSpec):
    b = b_value(job, spec)
    if job.mean == 0.0:
        return math.inf
    return b / job.mean


def default_bucketing(jobs, spec, factor=2.0):
    """Geometric buckets spanning the observed finite ratios."""
    finite = [r for r in (ratio(j, spec) for j in jobs) if 0 < r < math.inf]
    if not finite:
        return BucketingPolicy()
    if min(finite) == max(finite):
        return BucketingPolicy((min(finite),))
    return BucketingPolicy.geometric(min(finite), max(finite), factor)


def bucketed_fit(jobs: Sequence[Job], spec: ConstraintSpec,
                 policy: Optional[BucketingPolicy] = None) -> Assignment:
    """Route each job to its ratio bucket, then First-Fit within the bucket's own pool.

    Machine ids follow global purchase order across all pools.
    """
    jobs = list(jobs)
    if policy is None:
        policy = default_bucketing(jobs, spec)
    buckets = {}
    for pos, job in enumerate(jobs):
        buckets.setdefault(policy.bucket_of(ratio(job, spec)), []).append(pos)

    opened = []  # (arrival position of the opening job, jobs on the machine)
    for positions in buckets.values():
        pool = first_fit([jobs[p] for p in positions], spec)
        pos_of = {jobs[p].id: p for p in positions}
        opened.extend((pos_of[m.jobs[0]], pool.machine_jobs(m)) for m in pool.machines)
    opened.sort(key=lambda t: t[0])
    return Assignment.from_groups([g for _, g in opened], spec, "bucketed",
                                  arrival=[j.id for j in jobs])


def laziness_violations(assignment: Assignment):
    """Replay the arrival order and list machines opened while an older one fit.

    Returns the ids of offending machines (empty for a lazy run).
    """
    spec = assignment.spec
    d = d_of_alpha(spec)
    loads = {}
    order = [m.id for m in assignment.machines]
    bad = []
    for jid in assignment.arrival:
        job = assignment.jobs[jid]
        mid = assignment.job_to_machine[jid]
        if mid not in loads:
            for other in order:
                if other in loads:
                    if effective_load(loads[other].plus(job, spec), spec, d) <= spec.capacity:
                        bad.append(mid)
                        break
            loads[mid] = LoadSummary()
        loads[mid] = loads[mid].plus(job, spec)
    return bad
