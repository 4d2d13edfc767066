"""Jobs with uncertain usage and seeded synthetic workload generation.

Usage is described as a fraction of the requested size and scaled to
absolute units (cores) when a :class:`Job` is built.  All moments are exact
closed forms; nothing here is estimated by simulation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special

from overcommit import normal


class UsageKind(str, enum.Enum):
    TWO_POINT = "two-point"
    TRUNCATED_GAUSSIAN = "truncated-gaussian"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"bernoulli": cls.TWO_POINT, "twopoint": cls.TWO_POINT,
                   "two_point": cls.TWO_POINT, "gaussian": cls.TRUNCATED_GAUSSIAN,
                   "truncated_gaussian": cls.TRUNCATED_GAUSSIAN,
                   "truncatedgaussian": cls.TRUNCATED_GAUSSIAN}
        key = str(value).lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class UsageDistribution:
    """Utilization as a fraction of the requested size.

    For ``TWO_POINT`` the usage is either ``lower`` or ``upper`` and ``loc`` is
    its mean.  For ``TRUNCATED_GAUSSIAN`` ``loc``/``scale`` are the location and
    scale of the normal law *before* truncation to ``[lower, upper]``; ``loc``
    may lie outside the interval.
    """

    kind: UsageKind
    lower: float
    upper: float
    loc: float
    scale: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.lower < self.upper <= 1.0:
            raise ValueError(f"need 0 <= lower < upper <= 1, got [{self.lower}, {self.upper}]")
        if self.kind is UsageKind.TWO_POINT:
            if not self.lower <= self.loc <= self.upper:
                raise ValueError("two-point mean must lie within [lower, upper]")
        elif self.scale <= 0.0:
            raise ValueError("truncated Gaussian needs a positive scale")

    @property
    def p_upper(self):
        """Probability of the upper realization (two-point only)."""
        return (self.loc - self.lower) / (self.upper - self.lower)


def _truncation_mass(a, b):
    # P(a <= Z <= b) without cancellation when both bounds sit in the upper tail
    if a > 0.0:
        return normal.sf(a) - normal.sf(b)
    return normal.cdf(b) - normal.cdf(a)


def analytic_moments(usage: UsageDistribution):
    """Return ``(mean, variance)`` of the usage fraction."""
    if usage.kind is UsageKind.TWO_POINT:
        mean = usage.loc
        return mean, (usage.upper - mean) * (mean - usage.lower)

    a = (usage.lower - usage.loc) / usage.scale
    b = (usage.upper - usage.loc) / usage.scale
    z = _truncation_mass(a, b)
    pa, pb = normal.pdf(a), normal.pdf(b)
    shift = (pa - pb) / z
    mean = usage.loc + usage.scale * shift
    var = usage.scale ** 2 * (1.0 + (a * pa - b * pb) / z - shift * shift)
    # rounding can push the result a hair outside the support
    mean = min(max(mean, usage.lower), usage.upper)
    return mean, max(var, 0.0)


@dataclass(frozen=True)
class Job:
    """One schedulable unit, all statistics in absolute units.

    ``upper`` is the sellable bound (requested size times the upper fraction)
    and ``range_sq`` the squared width of the usage support.  Jobs built with
    :meth:`from_stats` carry no usage law and may have ``upper = inf``, in which
    case the clipping rule never binds for them.
    """

    id: int
    size: float
    lower: float
    upper: float
    mean: float
    variance: float
    range_sq: float
    usage: Optional[UsageDistribution] = field(default=None, compare=False)

    @classmethod
    def from_usage(cls, id, size, usage: UsageDistribution):
        mean, var = analytic_moments(usage)
        return cls(id=id, size=float(size), lower=size * usage.lower,
                   upper=size * usage.upper, mean=size * mean,
                   variance=size * size * var,
                   range_sq=(size * (usage.upper - usage.lower)) ** 2, usage=usage)

    @classmethod
    def from_stats(cls, id, mean, b, upper=math.inf):
        """Abstract job with the same dispersion ``b`` under every variant."""
        return cls(id=id, size=upper, lower=0.0, upper=upper, mean=float(mean),
                   variance=float(b), range_sq=float(b))


# VM size mix of one production data center, in percent (rows sum to 99.9)
TABLE_SIZE_PERCENT = ((1, 36.3), (2, 13.8), (4, 21.3), (8, 23.1), (16, 3.5), (32, 1.9))


def normalized_mix(pairs):
    total = sum(p for _, p in pairs)
    return tuple((c, p / total) for c, p in pairs)


DEFAULT_SIZE_MIX = normalized_mix(TABLE_SIZE_PERCENT)


TWO_POINT_LOC_MODES = ("probability", "clamp")


@dataclass(frozen=True)
class WorkloadSpec:
    job_count: int
    size_mix: tuple = DEFAULT_SIZE_MIX
    lower_range: tuple = (0.3, 0.6)
    upper_range: tuple = (0.7, 1.0)
    loc_range: tuple = (0.1, 0.5)
    scale_range: tuple = (0.1, 0.5)
    kind: UsageKind = UsageKind.TRUNCATED_GAUSSIAN
    seed: int = 0
    # how a drawn loc becomes a two-point law: "probability" uses it as
    # P(upper); "clamp" uses it as the mean, clamped into [lower, upper]
    two_point_loc: str = "probability"

    def __post_init__(self):
        object.__setattr__(self, "kind", UsageKind.parse(self.kind))
        if self.two_point_loc not in TWO_POINT_LOC_MODES:
            raise ValueError(f"two_point_loc must be one of {TWO_POINT_LOC_MODES}")
        object.__setattr__(self, "size_mix", tuple((float(c), float(p)) for c, p in self.size_mix))
        for name in ("lower_range", "upper_range", "loc_range", "scale_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} is not well-ordered: ({lo}, {hi})")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.job_count < 0:
            raise ValueError("job_count must be non-negative")
        total = sum(p for _, p in self.size_mix)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"size_mix probabilities sum to {total}, not 1")
        if self.lower_range[1] >= self.upper_range[0]:
            raise ValueError("lower_range must lie strictly below upper_range")

    def replace(self, **changes):
        from dataclasses import replace
        return replace(self, **changes)


def generate_workload(spec: WorkloadSpec) -> list[Job]:
    """Draw ``spec.job_count`` jobs; a pure function of ``spec``."""
    n = spec.job_count
    if n == 0:
        return []
    rng = np.random.default_rng(spec.seed)
    cores = np.array([c for c, _ in spec.size_mix])
    probs = np.array([p for _, p in spec.size_mix])
    sizes = rng.choice(cores, size=n, p=probs / probs.sum())
    lower = rng.uniform(*spec.lower_range, size=n)
    upper = rng.uniform(*spec.upper_range, size=n)
    loc = rng.uniform(*spec.loc_range, size=n)
    scale = rng.uniform(*spec.scale_range, size=n)

    jobs = []
    for j in range(n):
        if spec.kind is UsageKind.TWO_POINT:
            if spec.two_point_loc == "probability":
                mean = min(lower[j] + loc[j] * (upper[j] - lower[j]), upper[j])
            else:
                mean = min(max(loc[j], lower[j]), upper[j])
            usage = UsageDistribution(UsageKind.TWO_POINT, lower[j], upper[j], mean)
        else:
            usage = UsageDistribution(UsageKind.TRUNCATED_GAUSSIAN, lower[j], upper[j],
                                      loc[j], scale[j])
        jobs.append(Job.from_usage(j, sizes[j], usage))
    return jobs


def _truncnorm_fractions(lower, upper, loc, scale, u):
    """Inverse-CDF draws from normals truncated to [lower, upper].

    Arrays broadcast against ``u`` (uniforms in [0, 1)).  Intervals lying in
    the upper tail are sampled through the survival function so that tiny
    truncation masses keep full precision.
    """
    a = (lower - loc) / scale
    b = (upper - loc) / scale
    tail = a > 0.0
    # lower tail / straddling: invert the CDF
    fa, fb = special.ndtr(a), special.ndtr(b)
    z_cdf = special.ndtri(fa + u * (fb - fa))
    # upper tail: invert the survival function
    sa, sb = special.ndtr(-a), special.ndtr(-b)
    z_sf = -special.ndtri(sb + u * (sa - sb))
    z = np.where(tail, z_sf, z_cdf)
    return np.clip(loc + scale * z, lower, upper)


def sample_usage(job: Job, rng: np.random.Generator, size=None):
    """Draw realizations of the job's absolute usage.

    Returns a float when ``size`` is None, otherwise an array of that shape.
    """
    if job.usage is None:
        raise ValueError(f"job {job.id} has no usage distribution to sample")
    d = job.usage
    if d.kind is UsageKind.TWO_POINT:
        high = rng.random(size) < d.p_upper
        frac = np.where(high, d.upper, d.lower)
    else:
        frac = _truncnorm_fractions(d.lower, d.upper, d.loc, d.scale, rng.random(size))
    out = job.size * frac
    return float(out) if size is None else out


def sample_usage_matrix(jobs: Sequence[Job], samples: int, rng: np.random.Generator):
    """Independent realizations for many jobs, shape ``(samples, len(jobs))``."""
    n = len(jobs)
    out = np.empty((samples, n))
    if n == 0:
        return out
    two = [k for k, j in enumerate(jobs) if j.usage.kind is UsageKind.TWO_POINT]
    tg = [k for k, j in enumerate(jobs) if j.usage.kind is UsageKind.TRUNCATED_GAUSSIAN]
    u = rng.random((samples, n))
    if two:
        idx = np.array(two)
        lo = np.array([jobs[k].lower for k in two])
        hi = np.array([jobs[k].upper for k in two])
        p = np.array([jobs[k].usage.p_upper for k in two])
        out[:, idx] = np.where(u[:, idx] < p, hi, lo)
    if tg:
        idx = np.array(tg)
        us = [jobs[k].usage for k in tg]
        frac = _truncnorm_fractions(np.array([d.lower for d in us]), np.array([d.upper for d in us]),
                                    np.array([d.loc for d in us]), np.array([d.scale for d in us]),
                                    u[:, idx])
        out[:, idx] = frac * np.array([jobs[k].size for k in tg])
    return out
