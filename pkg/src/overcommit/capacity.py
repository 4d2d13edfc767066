"""Modified capacity constraints: risk multipliers, dispersion terms, clipping.

A machine's *effective load* is ``sum(mu) + D(alpha) * g(sum(b))`` for a
concave buffer shape ``g`` (square root, power ``p`` or ``log1p``), or the
linearized ``sum(mu + D * sqrt(b))`` for the benchmark variants, clipped at
the sum of the jobs' sellable upper bounds.  A job set is feasible on a
machine iff its effective load is at most the capacity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from overcommit import normal
from overcommit.workload import Job, sample_usage_matrix


class Variant(str, enum.Enum):
    NO_OVERCOMMIT = "no-overcommit"
    GAUSSIAN = "gaussian"
    HOEFFDING = "hoeffding"
    ROBUST = "robust"
    LINEAR_GAUSSIAN = "linear-gaussian"
    LINEAR_HOEFFDING = "linear-hoeffding"
    LINEAR_ROBUST = "linear-robust"
    PNORM = "pnorm"
    LOG_BUFFER = "log-buffer"

    @property
    def is_linear(self):
        return self in _LINEAR

    @property
    def uses_range(self):
        """True when b_j is the squared support width rather than the variance."""
        return self in (Variant.HOEFFDING, Variant.LINEAR_HOEFFDING)

    @property
    def nonlinear_counterpart(self):
        return _LINEAR.get(self)


_LINEAR = {
    Variant.LINEAR_GAUSSIAN: Variant.GAUSSIAN,
    Variant.LINEAR_HOEFFDING: Variant.HOEFFDING,
    Variant.LINEAR_ROBUST: Variant.ROBUST,
}


class Shape(enum.IntEnum):
    """Buffer shape codes shared with the compiled kernels."""
    UPPER = 0
    SQRT = 1
    POWER = 2
    LOG = 3
    LINEAR = 4


class DegenerateConfidence(ValueError):
    pass


@dataclass(frozen=True)
class ConstraintSpec:
    variant: Variant
    alpha: float = 1.0
    capacity: float = 1.0
    p: float = 0.5
    # PNORM and LOG_BUFFER need a source for b_j; variance unless told otherwise
    use_range: bool = False
    clip: bool = True

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.variant is Variant.NO_OVERCOMMIT:
            if self.alpha != 1.0:
                raise ValueError("no-overcommit is the alpha = 1 policy")
        elif self.alpha == 1.0:
            raise DegenerateConfidence(f"degenerate confidence: {self.variant.value} with alpha = 1")
        if not 0.5 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0.5, 1], got {self.p}")
        if self.capacity <= 0.0:
            raise ValueError("capacity must be positive")

    @property
    def shape(self) -> Shape:
        v = self.variant
        if v is Variant.NO_OVERCOMMIT:
            return Shape.UPPER
        if v.is_linear:
            return Shape.LINEAR
        if v is Variant.PNORM:
            return Shape.SQRT if self.p == 0.5 else Shape.POWER
        if v is Variant.LOG_BUFFER:
            return Shape.LOG
        return Shape.SQRT

    @property
    def exponent(self):
        if self.shape is Shape.SQRT:
            return 0.5
        if self.shape is Shape.POWER:
            return self.p
        return 1.0

    @property
    def d(self):
        return d_of_alpha(self)

    def with_alpha(self, alpha):
        return replace(self, alpha=alpha)


def d_of_alpha(spec: ConstraintSpec) -> float:
    """Risk multiplier on the buffer term; 0 for no-overcommit (unused)."""
    v, a = spec.variant, spec.alpha
    if v is Variant.NO_OVERCOMMIT:
        return 0.0
    if a >= 1.0:
        raise DegenerateConfidence("degenerate confidence")
    if v in (Variant.HOEFFDING, Variant.LINEAR_HOEFFDING) or (
            v in (Variant.PNORM, Variant.LOG_BUFFER) and spec.use_range):
        return math.sqrt(-0.5 * math.log1p(-a))
    if v in (Variant.ROBUST, Variant.LINEAR_ROBUST):
        return math.sqrt(a / (1.0 - a))
    return normal.ppf(a)


def b_value(job: Job, spec: ConstraintSpec) -> float:
    v = spec.variant
    if v is Variant.NO_OVERCOMMIT:
        return 0.0
    if v.uses_range or (v in (Variant.PNORM, Variant.LOG_BUFFER) and spec.use_range):
        return job.range_sq
    return job.variance


def job_terms(job: Job, spec: ConstraintSpec, d=None):
    """Per-job contributions ``(mu, bq, upper)`` to a :class:`LoadSummary`.

    Linear variants pre-buffer the dispersion: ``bq = D * sqrt(b_j)``.
    """
    b = b_value(job, spec)
    if spec.variant.is_linear:
        if d is None:
            d = d_of_alpha(spec)
        b = d * math.sqrt(b)
    return job.mean, b, job.upper


def job_arrays(jobs: Iterable[Job], spec: ConstraintSpec):
    """Column arrays ``(mu, bq, upper)`` for the compiled kernels."""
    d = d_of_alpha(spec)
    terms = [job_terms(j, spec, d) for j in jobs]
    if not terms:
        return np.empty(0), np.empty(0), np.empty(0)
    mu, bq, up = zip(*terms)
    return (np.asarray(mu, dtype=np.float64), np.asarray(bq, dtype=np.float64),
            np.asarray(up, dtype=np.float64))


@dataclass(frozen=True)
class LoadSummary:
    sum_mean: float = 0.0
    sum_b: float = 0.0
    sum_upper: float = 0.0
    count: int = 0

    def plus(self, job: Job, spec: ConstraintSpec) -> "LoadSummary":
        mu, bq, up = job_terms(job, spec)
        return LoadSummary(self.sum_mean + mu, self.sum_b + bq, self.sum_upper + up, self.count + 1)

    def minus(self, job: Job, spec: ConstraintSpec) -> "LoadSummary":
        mu, bq, up = job_terms(job, spec)
        return LoadSummary(self.sum_mean - mu, self.sum_b - bq, self.sum_upper - up, self.count - 1)

    @classmethod
    def of(cls, jobs: Iterable[Job], spec: ConstraintSpec) -> "LoadSummary":
        load = cls()
        for job in jobs:
            load = load.plus(job, spec)
        return load


def raw_load(sum_mean, sum_b, sum_upper, shape, d, p):
    """Unclipped effective load.  Kept in lockstep with the kernels."""
    if shape == Shape.UPPER:
        return sum_upper
    if shape == Shape.SQRT:
        return sum_mean + d * math.sqrt(sum_b)
    if shape == Shape.POWER:
        return sum_mean + d * math.pow(sum_b, p)
    if shape == Shape.LOG:
        return sum_mean + d * math.log1p(sum_b)
    return sum_mean + sum_b


def effective_load(load: LoadSummary, spec: ConstraintSpec, d=None) -> float:
    if load.count == 0:
        return 0.0
    if d is None:
        d = d_of_alpha(spec)
    raw = raw_load(load.sum_mean, load.sum_b, load.sum_upper, spec.shape, d, spec.exponent)
    if spec.clip and raw > load.sum_upper:
        return load.sum_upper
    return raw


def fits(load: LoadSummary, job: Job, spec: ConstraintSpec) -> bool:
    return effective_load(load.plus(job, spec), spec) <= spec.capacity


def is_feasible(jobs: Iterable[Job], spec: ConstraintSpec) -> bool:
    return effective_load(LoadSummary.of(jobs, spec), spec) <= spec.capacity


def chance_satisfaction_oracle(jobs, spec: ConstraintSpec, samples: int, rng) -> float:
    """Monte Carlo estimate of P(total usage <= capacity) for one machine."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    jobs = list(jobs)
    if not jobs:
        return 1.0
    if sum(j.upper for j in jobs) <= spec.capacity:
        return 1.0
    totals = sample_usage_matrix(jobs, samples, rng).sum(axis=1)
    return float(np.count_nonzero(totals <= spec.capacity)) / samples
