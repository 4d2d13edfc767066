"""Reproducible overcommitment experiments: alpha sweeps, CSV rows, summaries.

One replica draws one workload and one matrix of usage realizations.  Every
(variant, alpha, machine size) cell of that replica is packed and then scored
against the same realizations, so differences between cells are never
sampling noise between replicas.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import jsonschema
import numpy as np

from overcommit.bounds import audit_run
from overcommit.capacity import ConstraintSpec, Shape, Variant
from overcommit.montecarlo import DEFAULT_SAMPLES, estimate_violations
from overcommit.offline import local_search
from overcommit.online import best_fit, bucketed_fit, first_fit, next_fit
from overcommit.workload import (DEFAULT_SIZE_MIX, UsageKind, WorkloadSpec, generate_workload,
                                 sample_usage_matrix)

DEFAULT_ALPHAS = (0.5, 0.9, 0.99, 0.999, 0.9999, 0.99999)
RISK_TARGETS = (0.001, 0.01)
ALGORITHMS = ("first-fit", "best-fit", "next-fit", "bucketed", "local-search")


def pack(jobs, spec, algorithm="best-fit"):
    if algorithm == "first-fit":
        return first_fit(jobs, spec)
    if algorithm == "best-fit":
        return best_fit(jobs, spec)
    if algorithm == "next-fit":
        return next_fit(jobs, spec)
    if algorithm == "bucketed":
        return bucketed_fit(jobs, spec)
    if algorithm == "local-search":
        return local_search(first_fit(jobs, spec), spec)
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")


_RANGE = {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1},
          "minItems": 2, "maxItems": 2}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "workload": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "job_count": {"type": "integer", "minimum": 1},
                "kind": {"type": "string", "enum": ["two-point", "truncated-gaussian",
                                                    "bernoulli", "gaussian"]},
                "size_mix": {"type": "array", "minItems": 1,
                             "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                       "items": {"type": "number", "exclusiveMinimum": 0}}},
                "lower_range": _RANGE, "upper_range": _RANGE,
                "loc_range": _RANGE, "scale_range": _RANGE,
                "two_point_loc": {"type": "string", "enum": ["probability", "clamp"]},
            },
        },
        "machine_sizes": {"type": "array", "minItems": 1,
                          "items": {"type": "number", "exclusiveMinimum": 0}},
        "variants": {"type": "array", "minItems": 1, "items": {"oneOf": [
            {"type": "string", "enum": [v.value for v in Variant]},
            {"type": "object", "additionalProperties": False, "required": ["variant"],
             "properties": {"variant": {"type": "string", "enum": [v.value for v in Variant]},
                            "p": {"type": "number", "minimum": 0.5, "maximum": 1},
                            "use_range": {"type": "boolean"}}}]}},
        "alpha_grid": {"type": "array", "minItems": 1,
                       "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
        "replicas": {"type": "integer", "minimum": 1},
        "mc_samples": {"type": "integer", "minimum": 1},
        "base_seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "algorithm": {"type": "string", "enum": list(ALGORITHMS)},
        "output_path": {"type": "string"},
        "workers": {"type": "integer", "minimum": 1},
    },
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class VariantTemplate:
    variant: Variant
    p: float = 0.5
    use_range: bool = False

    @property
    def label(self):
        if self.variant is Variant.PNORM:
            return f"pnorm-{self.p:g}"
        return self.variant.value

    def spec(self, alpha, capacity):
        if self.variant is Variant.NO_OVERCOMMIT:
            return ConstraintSpec(self.variant, 1.0, capacity)
        return ConstraintSpec(self.variant, alpha, capacity, self.p, self.use_range)


@dataclass(frozen=True)
class ExperimentConfig:
    workload: WorkloadSpec = field(default_factory=lambda: WorkloadSpec(1000))
    machine_sizes: tuple = (32.0, 72.0)
    variants: tuple = (VariantTemplate(Variant.NO_OVERCOMMIT), VariantTemplate(Variant.GAUSSIAN),
                       VariantTemplate(Variant.HOEFFDING), VariantTemplate(Variant.ROBUST))
    alpha_grid: tuple = DEFAULT_ALPHAS
    replicas: int = 50
    mc_samples: int = DEFAULT_SAMPLES
    base_seed: int = 0
    algorithm: str = "best-fit"
    output_path: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        if any(not 0.0 < a < 1.0 for a in self.alpha_grid):
            raise ConfigError("alpha_grid must lie strictly inside (0, 1)")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if any(v <= 0 for v in self.machine_sizes):
            raise ConfigError("machine sizes must be positive")

    @classmethod
    def from_dict(cls, data):
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config schema error at {where}: {exc.message}") from None
        data = dict(data)
        w = dict(data.pop("workload", {}))
        if "size_mix" in w:
            w["size_mix"] = tuple(tuple(x) for x in w["size_mix"])
        w = {k: tuple(v) if isinstance(v, list) else v for k, v in w.items()}
        try:
            workload = WorkloadSpec(job_count=w.pop("job_count", 1000), **w)
        except ValueError as exc:
            raise ConfigError(f"config schema error at workload: {exc}") from None
        variants = []
        for v in data.pop("variants", ["no-overcommit", "gaussian", "hoeffding", "robust"]):
            v = {"variant": v} if isinstance(v, str) else v
            variants.append(VariantTemplate(Variant(v["variant"]), v.get("p", 0.5),
                                            v.get("use_range", False)))
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        if "machine_sizes" in kw:
            kw["machine_sizes"] = tuple(float(x) for x in kw["machine_sizes"])
        return cls(workload=workload, variants=tuple(variants), **kw)

    @classmethod
    def from_json(cls, path):
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)


@dataclass(frozen=True)
class ExperimentRow:
    distribution: str
    variant: str
    algorithm: str
    alpha: float
    machine_size: float
    replica: int
    seed: int
    mc_seed: int
    machines_used: int
    violation_rate: float
    ocf: float
    savings_vs_no_overcommit: float
    audit_flags: str


CSV_COLUMNS = tuple(f.name for f in fields(ExperimentRow))


def replica_seeds(base_seed, replica):
    """``(workload seed, Monte Carlo seed)`` for one replica."""
    a, b = np.random.SeedSequence([int(base_seed), int(replica)]).generate_state(2, dtype=np.uint64)
    return int(a), int(b)


def _audit_flags(assignment, spec):
    if spec.shape is not Shape.SQRT:
        return ""
    return audit_run(assignment).flags


def run_replica(config: ExperimentConfig, replica: int):
    wseed, mseed = replica_seeds(config.base_seed, replica)
    jobs = generate_workload(config.workload.replace(seed=wseed))
    usage = sample_usage_matrix(jobs, config.mc_samples, np.random.default_rng(mseed))
    total_upper = float(math.fsum(j.upper for j in jobs))
    dist = config.workload.kind.value
    rows = []
    for size in config.machine_sizes:
        def cell(template, alpha):
            spec = template.spec(alpha, size)
            a = pack(jobs, spec, config.algorithm)
            est = estimate_violations(a, usage=usage, seed=mseed)
            return a, est, spec

        base, base_est, base_spec = cell(VariantTemplate(Variant.NO_OVERCOMMIT), 1.0)
        b1 = base.n_machines

        def row(label, alpha, a, est, spec):
            m = a.n_machines
            return ExperimentRow(dist, label, config.algorithm, alpha, size, replica, wseed, mseed, m,
                                 est.aggregate, total_upper / (size * m), 1.0 - m / b1,
                                 _audit_flags(a, spec))

        for t in config.variants:
            if t.variant is Variant.NO_OVERCOMMIT:
                rows.append(row(Variant.NO_OVERCOMMIT.value, 1.0, base, base_est, base_spec))
                continue
            for alpha in config.alpha_grid:
                rows.append(row(t.label, float(alpha), *cell(t, alpha)))
    return rows


def run_experiment(config: ExperimentConfig) -> list:
    """All rows, ordered by (replica, variant, alpha, machine size)."""
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            chunks = list(pool.map(run_replica, [config] * config.replicas, range(config.replicas)))
    else:
        chunks = [run_replica(config, r) for r in range(config.replicas)]
    order = {Variant.NO_OVERCOMMIT.value: -1}
    order.update({t.label: k for k, t in enumerate(config.variants)})
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r.replica, order[r.variant], r.alpha, r.machine_size))
    if config.output_path:
        write_csv(rows, config.output_path)
    return rows


def _fmt(v):
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(rows, path):
    Path(path).write_text(rows_to_csv(rows), newline="")


def read_csv(path):
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            kw = {}
            for f in fields(ExperimentRow):
                raw = rec[f.name]
                kw[f.name] = int(raw) if f.type == "int" else float(raw) if f.type == "float" else raw
            out.append(ExperimentRow(**kw))
    return out


# ---- summaries ---------------------------------------------------------------

def pareto_frontier(points):
    """Non-dominated ``(risk, machines)`` points, risk ascending, machines descending."""
    front = []
    for r, m in sorted(points, key=lambda t: (t[0], t[1])):
        if not front or m < front[-1][1]:
            if front and front[-1][0] == r:
                front[-1] = (r, m)
            else:
                front.append((r, m))
    return front


def interpolate_machines(points, target):
    """Machines needed at realized risk ``target`` by linear interpolation on the frontier.

    Risks beyond the largest observed one take the last frontier value.
    """
    front = pareto_frontier(points)
    if not front:
        return math.nan
    if target <= front[0][0]:
        return front[0][1]
    for (r0, m0), (r1, m1) in zip(front, front[1:]):
        if r0 <= target <= r1:
            return m0 + (m1 - m0) * (target - r0) / (r1 - r0)
    return front[-1][1]


@dataclass(frozen=True)
class SummaryRow:
    distribution: str
    variant: str
    machine_size: float
    target_risk: float
    machines: float
    baseline: float
    savings: float
    replicas: int


def baselines(rows):
    """``{(distribution, size, replica): B(1)}`` from baseline rows or the savings column."""
    out = {}
    for r in rows:
        key = (r.distribution, r.machine_size, r.replica)
        if r.variant == Variant.NO_OVERCOMMIT.value:
            out[key] = r.machines_used
        elif key not in out:
            # savings = 1 - m / B(1) with integer B(1)
            out.setdefault(key, int(round(r.machines_used / (1.0 - r.savings_vs_no_overcommit))))
    return out


def _group(rows):
    cells = defaultdict(list)
    base = defaultdict(list)
    for (dist, size, _), b1 in sorted(baselines(rows).items()):
        base[(dist, size)].append(b1)
    for r in rows:
        if r.variant != Variant.NO_OVERCOMMIT.value:
            cells[(r.distribution, r.machine_size, r.variant)].append(r)
    return cells, base


def curve_points(rows, baseline):
    """Per-alpha ``(risk, machines)`` averaged over the given rows, anchored at ``(0, baseline)``."""
    by_alpha = defaultdict(list)
    for r in rows:
        by_alpha[r.alpha].append(r)
    pts = [(0.0, baseline)]
    for a in sorted(by_alpha):
        rs = by_alpha[a]
        pts.append((float(np.mean([x.violation_rate for x in rs])),
                    float(np.mean([x.machines_used for x in rs]))))
    return pts


def summarize(rows: Sequence[ExperimentRow], targets=RISK_TARGETS) -> list:
    """Interpolated machines and savings per (distribution, variant, size, target risk).

    Machines and risk are first averaged over replicas for each alpha, then
    the resulting tradeoff curve is interpolated at each target risk.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to summarize")
    cells, base = _group(rows)
    out = []
    for (dist, size, variant), rs in sorted(cells.items()):
        b = base.get((dist, size))
        if not b:
            raise ValueError(f"no no-overcommit baseline for {dist} size {size:g}")
        b1 = float(np.mean(b))
        pts = curve_points(rs, b1)
        n_rep = len({x.replica for x in rs})
        for t in targets:
            m = interpolate_machines(pts, t)
            out.append(SummaryRow(dist, variant, size, t, m, b1, 1.0 - m / b1, n_rep))
    for (dist, size), b in sorted(base.items()):
        b1 = float(np.mean(b))
        for t in targets:
            out.append(SummaryRow(dist, Variant.NO_OVERCOMMIT.value, size, t, b1, b1, 0.0, len(b)))
    return out


def replica_savings(rows, variant, machine_size, target, distribution=None):
    """``{replica: savings}`` interpolated on each replica's own tradeoff curve."""
    out = {}
    by_rep = defaultdict(list)
    rows = [r for r in rows if r.machine_size == machine_size
            and (not distribution or r.distribution == distribution)]
    base = {rep: b for (_, _, rep), b in baselines(rows).items()}
    for r in rows:
        if r.variant == variant:
            by_rep[r.replica].append(r)
    for rep, rs in by_rep.items():
        b1 = base[rep]
        pts = [(0.0, float(b1))] + [(x.violation_rate, float(x.machines_used)) for x in rs]
        out[rep] = 1.0 - interpolate_machines(pts, target) / b1
    return out


def format_summary(summary) -> str:
    lines = [f"{'distribution':<20}{'variant':<18}{'size':>6}{'risk':>8}{'machines':>10}"
             f"{'baseline':>10}{'savings':>9}"]
    for s in summary:
        lines.append(f"{s.distribution:<20}{s.variant:<18}{s.machine_size:>6g}{s.target_risk:>8.2%}"
                     f"{s.machines:>10.2f}{s.baseline:>10.2f}{s.savings:>9.2%}")
    return "\n".join(lines)


def config_to_dict(config: ExperimentConfig):
    w = config.workload
    return {
        "workload": {"job_count": w.job_count, "kind": w.kind.value,
                     "size_mix": [list(x) for x in w.size_mix],
                     "lower_range": list(w.lower_range), "upper_range": list(w.upper_range),
                     "loc_range": list(w.loc_range), "scale_range": list(w.scale_range),
                     "two_point_loc": w.two_point_loc},
        "machine_sizes": list(config.machine_sizes),
        "variants": [{"variant": t.variant.value, "p": t.p, "use_range": t.use_range}
                     for t in config.variants],
        "alpha_grid": list(config.alpha_grid), "replicas": config.replicas,
        "mc_samples": config.mc_samples, "base_seed": config.base_seed,
        "algorithm": config.algorithm,
    }


def reference_config(kind=UsageKind.TRUNCATED_GAUSSIAN, **overrides) -> ExperimentConfig:
    """Fifty 1000-job replicas on 32- and 72-core machines, 5000 realizations each."""
    base = dict(workload=WorkloadSpec(1000, DEFAULT_SIZE_MIX, kind=kind))
    base.update(overrides)
    return ExperimentConfig(**base)
