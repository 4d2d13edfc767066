import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from overcommit.audit import audit_spec, denormalized_job, lemma_counterexamples, random_instance, run_audit
from overcommit.bounds import (audit_run, cost_of_set, f_bound, f_of_p, f_value, machine_delta,
                               machine_epsilon, normalize, overcommit_report, pnorm_ratio_bound,
                               sum_mu_plus_b)
from overcommit.capacity import ConstraintSpec, Variant
from overcommit.offline import exact_optimal
from overcommit.online import Assignment, best_fit, first_fit
from overcommit.workload import Job

PNORM_075 = 2.5877910511162607  # 2 / (1 - 0.25 * 0.75 ** (1/3))


def test_cost_examples():
    assert cost_of_set([]) == 0.0
    assert cost_of_set([(0.5, 0.25)]) == 1.0
    assert cost_of_set([(0.5, 0.0), (0.3, 0.04)]) == pytest.approx(1.0, abs=1e-15)
    assert cost_of_set([(0.5, 0.2601)]) == pytest.approx(1.01)
    assert sum_mu_plus_b([(0.5, 0.2601)]) == pytest.approx(0.7601)
    assert sum_mu_plus_b([(1.01, 0.0)]) == pytest.approx(1.01)


def test_f_examples():
    assert f_value(0.5, 0.25) == pytest.approx(1.0, abs=1e-15)
    for mu in (0.0, 0.3, 1.7):
        assert f_value(mu, 0.0) == mu


@given(st.floats(0, 5), st.floats(0, 5), st.floats(0.01, 100))
def test_f_homogeneous(mu, b, eta):
    assert f_value(eta * mu, eta * b) == pytest.approx(eta * f_value(mu, b), rel=1e-12, abs=1e-12)


def test_f_concave_each_argument():
    grid = np.linspace(0.01, 2.0, 40)
    h = 1e-3
    for a in grid:
        for b in grid:
            assert f_value(a + h, b) - 2 * f_value(a, b) + f_value(a - h, b) <= 1e-12
            assert f_value(a, b + h) - 2 * f_value(a, b) + f_value(a, b - h) <= 1e-12


def test_f_feasible_singletons_at_most_one():
    rng = np.random.default_rng(0)
    for _ in range(2000):
        mu = rng.uniform(0, 1)
        b = rng.uniform(0, 1 - mu) ** 2
        assert f_value(mu, b) <= 1.0 + 1e-12


def test_pnorm_ratio():
    assert pnorm_ratio_bound(0.5) == pytest.approx(8 / 3, abs=1e-15)
    assert pnorm_ratio_bound(1.0) == 2.0
    assert pnorm_ratio_bound(0.75) == pytest.approx(PNORM_075, abs=1e-12)
    assert pnorm_ratio_bound(0.75) == pytest.approx(2.5876, abs=1e-3)
    assert f_of_p(1.0) == 1.0
    with pytest.raises(ValueError):
        pnorm_ratio_bound(0.3)


def test_overcommit_report():
    r = overcommit_report(2, 2, 50.0, 30.0)
    assert r.savings == 0.0 and r.ocf_one / r.ocf_alpha == 1.0
    r = overcommit_report(1, 2, 60.0, 30.0)
    assert r.savings == 0.5
    assert r.ocf_one == 1.0
    with pytest.raises(ValueError):
        overcommit_report(0, 2, 1.0, 1.0)


@given(st.integers(1, 500), st.integers(1, 500), st.floats(1, 1e4), st.floats(1, 100))
def test_ocf_identity(ba, b1, total, v):
    r = overcommit_report(ba, b1, total, v)
    assert r.ocf_one / r.ocf_alpha == pytest.approx(ba / b1, rel=1e-14)


def test_normalization_roundtrip():
    spec = audit_spec()
    jobs = [denormalized_job(k, mu, b, spec) for k, (mu, b) in enumerate([(0.2, 0.1), (0.5, 0.0)])]
    got = [x for pair in normalize(jobs, spec) for x in pair]
    assert got == pytest.approx([0.2, 0.1, 0.5, 0.0], abs=1e-14)
    with pytest.raises(ValueError):
        normalize(jobs, ConstraintSpec(Variant.LINEAR_GAUSSIAN, 0.9))


def test_epsilon_and_delta():
    assert machine_epsilon([[(0.5, 0.25)]]) == 0.0
    assert machine_epsilon([[(0.5, 0.0)], [(0.9, 0.0)]]) == pytest.approx(0.5)
    assert machine_delta([[(0.1, 0.1), (0.2, 0.3)]]) == pytest.approx(0.5)
    assert machine_delta([[(0.1, 0.0), (0.2, 0.0)]]) == 0.0
    assert machine_delta([[(0.1, 0.0), (0.2, 0.1)]]) == math.inf


def test_single_machine_ratio_one():
    spec = audit_spec()
    jobs = [denormalized_job(0, 0.3, 0.01, spec)]
    a = first_fit(jobs, spec)
    assert audit_run(a, oracle_opt=1).ratio == 1.0
    assert audit_run(a).ratio == 1.0


@pytest.mark.parametrize("seed", range(30))
def test_lower_bounds_below_oracle(seed):
    rng = np.random.default_rng(seed)
    spec = audit_spec()
    jobs = random_instance(rng, spec)
    opt, _ = exact_optimal(jobs, spec)
    pairs = normalize(jobs, spec)
    assert sum_mu_plus_b(pairs) <= opt + 1e-9
    assert f_bound(pairs) <= opt + 1e-9
    for alg in (first_fit, best_fit):
        res = audit_run(alg(jobs, spec), oracle_opt=opt)
        assert res.passed, res.flags
        assert res.bound_source == "oracle" and res.lower_bound == opt


def test_full_machines_trigger_theorem_3():
    spec = audit_spec()
    jobs = [denormalized_job(k, 0.3, 0.0, spec) for k in range(30)]
    a = first_fit(jobs, spec)
    res = audit_run(a)
    names = {c.name: c for c in res.checks}
    assert res.epsilon <= 0.1 + 1e-12
    assert names["full-4/3+3eps"].hypothesis_met
    assert res.machines <= (4 / 3 + 0.3) * sum_mu_plus_b(normalize(jobs, spec))
    assert res.passed


def test_homogeneous_audit():
    spec = audit_spec()
    jobs = [denormalized_job(k, 0.2, 0.02, spec) for k in range(40)]
    res = audit_run(best_fit(jobs, spec))
    assert res.delta == 0.0
    assert {c.name for c in res.checks if c.hypothesis_met} >= {"full-homogeneous", "lazy-pairs"}
    assert res.passed


def test_pnorm_audit_uses_corollary():
    spec = audit_spec(variant=Variant.PNORM, p=0.75)
    rng = np.random.default_rng(5)
    jobs = random_instance(rng, spec, 10)
    opt, _ = exact_optimal(jobs, spec)
    res = audit_run(first_fit(jobs, spec), oracle_opt=opt)
    assert [c.name for c in res.checks if c.hypothesis_met][0] == "lazy-2/f(p)"
    assert res.passed


def test_violation_is_flagged():
    spec = audit_spec()
    jobs = [denormalized_job(k, 0.1, 0.0, spec) for k in range(4)]
    bad = Assignment.from_groups([[j] for j in jobs], spec, "first-fit")
    res = audit_run(bad, oracle_opt=1)
    assert not res.passed
    assert "lazy-8/3:FAIL" in res.flags


def test_clipped_runs_skip_sum_bounds():
    spec = ConstraintSpec(Variant.ROBUST, 0.999, 10.0)
    jobs = [Job.from_stats(k, 0.5, 1.0, upper=1.0) for k in range(10)]
    res = audit_run(first_fit(jobs, spec))
    assert res.clip_binds
    assert "full-homogeneous" not in {c.name for c in res.checks if c.hypothesis_met}
    assert res.bound_source == "trivial"


def test_small_audit_and_lemma():
    report = run_audit(seed=3, instances=40)
    assert report.passed, report.lines()
    assert report.lines()[-1] == "PASS"
    assert lemma_counterexamples(np.random.default_rng(0), sets=5000) == []
