import numpy as np
import pytest

from conftest import copies
from overcommit.bounds import f_bound, normalize
from overcommit.capacity import ConstraintSpec, Variant, effective_load
from overcommit.online import (Assignment, BucketingPolicy, InfeasibleAssignmentError,
                               OversizedJobError, best_fit, bucketed_fit, first_fit,
                               laziness_violations, next_fit)
from overcommit.workload import Job, WorkloadSpec, generate_workload

GAUSS = ConstraintSpec(Variant.GAUSSIAN, 0.99, 1.0)


def classical(sizes, capacity, best):
    loads, out = [], []
    for s in sizes:
        chosen, slack = -1, None
        for i, l in enumerate(loads):
            if l + s <= capacity:
                if not best:
                    chosen = i
                    break
                if slack is None or capacity - (l + s) < slack:
                    chosen, slack = i, capacity - (l + s)
        if chosen < 0:
            loads.append(0.0)
            chosen = len(loads) - 1
        loads[chosen] += s
        out.append(chosen)
    return out


def slots(a):
    return [a.job_to_machine[j] for j in a.arrival]


@pytest.mark.parametrize("seed", range(100))
def test_deterministic_jobs_match_classical(seed):
    rng = np.random.default_rng(seed)
    sizes = rng.uniform(0.01, 0.7, int(rng.integers(1, 60))).tolist()
    jobs = [Job.from_stats(k, s, 0.0) for k, s in enumerate(sizes)]
    assert slots(first_fit(jobs, GAUSS)) == classical(sizes, 1.0, best=False)
    assert slots(best_fit(jobs, GAUSS)) == classical(sizes, 1.0, best=True)


def test_empty_and_single():
    for alg in (first_fit, best_fit, next_fit, bucketed_fit):
        assert alg([], GAUSS).n_machines == 0
    assert best_fit([Job.from_stats(0, 0.5, 0.01)], GAUSS).n_machines == 1


def test_72_copies_two_machines(symmetric_job):
    spec = ConstraintSpec(Variant.HOEFFDING, 0.992, 30.0)
    for alg in (first_fit, best_fit):
        a = alg(copies(symmetric_job, 72), spec)
        assert [len(m.jobs) for m in a.machines] == [36, 36]


def test_oversized_job_is_identified():
    jobs = [Job.from_stats(0, 0.2, 0.0), Job.from_stats(7, 1.5, 0.0)]
    with pytest.raises(OversizedJobError, match="7"):
        first_fit(jobs, GAUSS)
    with pytest.raises(OversizedJobError):
        next_fit(jobs, GAUSS)


def test_next_fit_two_jobs_one_machine():
    jobs = [Job.from_stats(0, 0.2, 0.0), Job.from_stats(1, 0.3, 0.0)]
    assert next_fit(jobs, GAUSS).n_machines == 1


@pytest.mark.parametrize("seed", range(50))
def test_next_fit_alternating_not_better(seed):
    rng = np.random.default_rng(seed)
    n = 40
    big = rng.uniform(0.5, 0.8, n)
    small = rng.uniform(0.05, 0.3, n)
    jobs = []
    for k in range(n):
        jobs.append(Job.from_stats(2 * k, big[k], rng.uniform(0, 0.001)))
        jobs.append(Job.from_stats(2 * k + 1, small[k], rng.uniform(0, 0.001)))
    assert next_fit(jobs, GAUSS).n_machines >= first_fit(jobs, GAUSS).n_machines


@pytest.mark.parametrize("variant", [Variant.GAUSSIAN, Variant.HOEFFDING, Variant.ROBUST,
                                     Variant.LINEAR_GAUSSIAN, Variant.NO_OVERCOMMIT])
def test_runs_are_feasible_and_lazy(variant):
    alpha = 1.0 if variant is Variant.NO_OVERCOMMIT else 0.99
    spec = ConstraintSpec(variant, alpha, 32.0)
    jobs = generate_workload(WorkloadSpec(400, seed=8))
    for alg in (first_fit, best_fit):
        a = alg(jobs, spec)
        a.check()
        assert laziness_violations(a) == []
        for m in a.machines:
            assert effective_load(m.load, spec) <= spec.capacity
    nf = next_fit(jobs, spec)
    nf.check()


def test_next_fit_can_be_non_lazy():
    jobs = [Job.from_stats(k, s, 0.0) for k, s in enumerate([0.6, 0.5, 0.4, 0.35])]
    a = next_fit(jobs, GAUSS)
    # the last job opens machine 2 although machine 0 still has room
    assert slots(a) == [0, 1, 1, 2]
    assert laziness_violations(a) == [2]
    assert laziness_violations(first_fit(jobs, GAUSS)) == []


def test_shard_limits_candidates():
    jobs = [Job.from_stats(k, s, 0.0) for k, s in enumerate([0.5, 0.9, 0.9, 0.4])]
    assert slots(first_fit(jobs, GAUSS)) == [0, 1, 2, 0]
    assert slots(first_fit(jobs, GAUSS, shard=2)) == [0, 1, 2, 3]


def test_best_fit_prefers_tightest():
    jobs = [Job.from_stats(k, s, 0.0) for k, s in enumerate([0.5, 0.7, 0.25])]
    assert slots(best_fit(jobs, GAUSS)) == [0, 1, 1]
    assert slots(first_fit(jobs, GAUSS)) == [0, 1, 0]


def test_check_rejects_bad_assignments():
    jobs = [Job.from_stats(0, 0.6, 0.0), Job.from_stats(1, 0.6, 0.0)]
    with pytest.raises(InfeasibleAssignmentError):
        Assignment.from_groups([jobs], GAUSS).check()
    a = Assignment.from_groups([[jobs[0]], [jobs[1]]], GAUSS)
    a.check()
    a.machines[1].jobs.clear()
    with pytest.raises(InfeasibleAssignmentError):
        a.check()


def test_bucketing_policy():
    with pytest.raises(ValueError):
        BucketingPolicy((1.0, 0.5))
    with pytest.raises(ValueError):
        BucketingPolicy((0.0, 1.0))
    pol = BucketingPolicy.geometric(0.1, 1.0)
    assert pol.boundaries == pytest.approx((0.1, 0.2, 0.4, 0.8))
    assert pol.bucket_of(0.05) == 0
    assert pol.bucket_of(0.3) == 2
    assert pol.bucket_of(float("inf")) == pol.n_buckets - 1


def test_single_bucket_equals_first_fit():
    jobs = generate_workload(WorkloadSpec(300, seed=3))
    spec = ConstraintSpec(Variant.GAUSSIAN, 0.99, 32.0)
    a = bucketed_fit(jobs, spec, BucketingPolicy())
    b = first_fit(jobs, spec)
    assert [m.jobs for m in a.machines] == [m.jobs for m in b.machines]


def test_buckets_do_not_mix_classes():
    spec = ConstraintSpec(Variant.GAUSSIAN, 0.99, 10.0)
    jobs = []
    for k in range(60):
        jobs.append(Job.from_stats(2 * k, 0.4, 0.004) if k % 2 else Job.from_stats(2 * k, 0.1, 0.4))
        jobs.append(Job.from_stats(2 * k + 1, 0.0, 0.05))
    a = bucketed_fit(jobs, spec, BucketingPolicy((0.1, 1.0)))
    a.check()
    for m in a.machines:
        assert len({round(j.variance / j.mean, 6) if j.mean else None for j in a.machine_jobs(m)}) == 1
    assert [m.id for m in a.machines] == list(range(a.n_machines))


def test_bucketed_homogeneous_near_f_bound():
    spec = ConstraintSpec(Variant.GAUSSIAN, 0.99, 32.0, clip=False)
    rng = np.random.default_rng(4)
    jobs = []
    for k in range(2000):
        r = [0.01, 0.1, 1.0][k % 3]
        mu = rng.uniform(0.2, 2.0)
        jobs.append(Job.from_stats(k, mu, r * mu * rng.uniform(1.0, 1.05)))
    a = bucketed_fit(jobs, spec, BucketingPolicy.geometric(0.005, 2.0, 1.1))
    a.check()
    assert a.n_machines <= (4 / 3 + 0.05) * f_bound(normalize(jobs, spec))


def test_default_buckets_with_one_ratio():
    jobs = [Job.from_stats(k, 0.2, 0.002) for k in range(3)] + [Job.from_stats(9, 0.1, 0.0)]
    a = bucketed_fit(jobs, GAUSS)
    a.check()
    assert a.n_machines == 2
