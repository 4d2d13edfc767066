"""Realized capacity-violation rates of packed assignments."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from overcommit import kernels
from overcommit.workload import sample_usage_matrix

DEFAULT_SAMPLES = 5000


@dataclass(frozen=True)
class ViolationEstimate:
    per_machine: tuple
    aggregate: float
    samples: int
    seed: object = None

    @property
    def standard_error(self):
        """Binomial standard error of ``aggregate`` over all machine-samples."""
        n = self.samples * max(len(self.per_machine), 1)
        p = self.aggregate
        return math.sqrt(max(p * (1.0 - p), 0.25 / n) / n)


def estimate_violations(assignment, samples=DEFAULT_SAMPLES, rng=None, seed=None,
                        usage=None) -> ViolationEstimate:
    """Fraction of sampled realizations in which a machine's total usage exceeds V.

    Every job is drawn independently, so machines are independent of one
    another.  ``usage`` may carry a precomputed ``(samples, jobs)`` realization
    matrix whose columns follow ``assignment.arrival``; reusing one matrix
    across assignments of the same workload gives common random numbers.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if rng is None:
        rng = np.random.default_rng(seed)
    if usage is None:
        jobs = [assignment.jobs[j] for j in assignment.arrival]
        usage = sample_usage_matrix(jobs, samples, rng)
    samples = usage.shape[0]
    m = assignment.n_machines
    if m == 0:
        return ViolationEstimate((), 0.0, samples, seed)
    counts = kernels.machine_violations(np.ascontiguousarray(usage, dtype=np.float64),
                                        assignment.machine_index(), m,
                                        float(assignment.spec.capacity))
    rates = tuple(float(c) / samples for c in counts.tolist())
    return ViolationEstimate(rates, float(counts.sum()) / (samples * m), samples, seed)
