"""Command-line entry point: ``overcommit {run,frontier,audit,single}``."""

from __future__ import annotations

import argparse
import csv
import sys

from overcommit import kernels
from overcommit.audit import run_audit
from overcommit.capacity import ConstraintSpec, DegenerateConfidence, Variant, effective_load
from overcommit.classes import JobClass, two_class_frontier
from overcommit.experiment import (ALGORITHMS, ConfigError, ExperimentConfig, format_summary,
                                   pack, rows_to_csv, run_experiment, summarize)
from overcommit.montecarlo import estimate_violations
from overcommit.offline import EXACT_CAP
from overcommit.workload import generate_workload


def _u64(text):
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _load_config(args):
    if args.config is None:
        raise ConfigError("a --config file is required")
    cfg = ExperimentConfig.from_json(args.config)
    changes = {}
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.algorithm is not None:
        changes["algorithm"] = args.algorithm
    if args.out is not None:
        changes["output_path"] = args.out
    if changes:
        from dataclasses import replace
        cfg = replace(cfg, **changes)
    return cfg


def cmd_run(args):
    cfg = _load_config(args)
    rows = run_experiment(cfg)
    summary = format_summary(summarize(rows))
    if cfg.output_path:
        print(summary)
        print(f"wrote {len(rows)} rows to {cfg.output_path}")
    else:
        sys.stdout.write(rows_to_csv(rows))
        print(summary, file=sys.stderr)
    return 0


def cmd_frontier(args):
    spec = ConstraintSpec(Variant(args.variant), args.alpha, args.capacity)
    c1 = JobClass(args.mu1, args.b1, upper=args.upper1)
    c2 = JobClass(args.mu2, args.b2, upper=args.upper2)
    rows = two_class_frontier(c1, c2, spec, range(0, args.n2_max + 1, args.step))
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["n2", "max_n1"])
        for n2, n1 in rows:
            w.writerow([n2, "" if n1 is None else n1])
    finally:
        if args.out:
            out.close()
    return 0


def cmd_audit(args):
    algs = (args.algorithm,) if args.algorithm else ("first-fit", "best-fit", "local-search")
    seed = 0 if args.seed is None else args.seed
    report = run_audit(seed, args.instances, args.max_jobs, algs)
    print(f"seed: {seed}")
    print("\n".join(report.lines()))
    return 0 if report.passed else 1


def cmd_single(args):
    cfg = _load_config(args) if args.config else ExperimentConfig()
    seed = args.seed if args.seed is not None else cfg.base_seed
    jobs = generate_workload(cfg.workload.replace(seed=seed))
    variant = Variant(args.variant)
    alpha = 1.0 if variant is Variant.NO_OVERCOMMIT else args.alpha
    spec = ConstraintSpec(variant, alpha, args.size)
    assignment = pack(jobs, spec, args.algorithm or cfg.algorithm)
    est = estimate_violations(assignment, samples=args.samples, seed=seed)
    print(f"backend={kernels.BACKEND} jobs={len(jobs)} variant={variant.value} alpha={alpha} "
          f"size={args.size:g} algorithm={assignment.algorithm}")
    print(f"{'machine':>7} {'jobs':>5} {'sum_mu':>9} {'sum_b':>9} {'sum_upper':>9} {'load':>9} {'risk':>8}")
    for m, rate in zip(assignment.machines, est.per_machine):
        load = m.load
        print(f"{m.id:>7} {load.count:>5} {load.sum_mean:>9.3f} {load.sum_b:>9.3f} "
              f"{load.sum_upper:>9.3f} {effective_load(load, spec):>9.3f} {rate:>8.4f}")
    print(f"machines={assignment.n_machines} violation_rate={est.aggregate:.6f} "
          f"(se {est.standard_error:.6f})")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--seed", type=_u64, help="base seed (overrides the config)")
    common.add_argument("--out", help="output CSV path")
    common.add_argument("--algorithm", choices=ALGORITHMS, help="packing algorithm")

    p = argparse.ArgumentParser(prog="overcommit",
                                description="Chance-constrained VM packing experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="run an experiment config, emit CSV")
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("frontier", parents=[common], help="two-class capacity frontier as CSV")
    f.add_argument("--mu1", type=float, required=True)
    f.add_argument("--b1", type=float, required=True)
    f.add_argument("--mu2", type=float, required=True)
    f.add_argument("--b2", type=float, required=True)
    f.add_argument("--upper1", type=float, default=float("inf"))
    f.add_argument("--upper2", type=float, default=float("inf"))
    f.add_argument("--variant", default="gaussian", choices=[v.value for v in Variant])
    f.add_argument("--alpha", type=float, default=0.99)
    f.add_argument("--capacity", type=float, default=30.0)
    f.add_argument("--n2-max", type=int, default=40)
    f.add_argument("--step", type=int, default=1)
    f.set_defaults(func=cmd_frontier)

    a = sub.add_parser("audit", parents=[common], help="theorem audits against the exact oracle")
    a.add_argument("--instances", type=int, default=500)
    a.add_argument("--max-jobs", type=int, default=EXACT_CAP)
    a.set_defaults(func=cmd_audit)

    s = sub.add_parser("single", parents=[common], help="one workload, one variant, per-machine trace")
    s.add_argument("--variant", default="gaussian", choices=[v.value for v in Variant])
    s.add_argument("--alpha", type=float, default=0.99)
    s.add_argument("--size", type=float, default=72.0)
    s.add_argument("--samples", type=int, default=5000)
    s.set_defaults(func=cmd_single)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "audit" and args.algorithm not in (None, "first-fit", "best-fit", "local-search"):
        parser.error(f"--algorithm {args.algorithm} has no oracle-checked guarantee to audit")
    try:
        return args.func(args)
    except (ConfigError, DegenerateConfidence, ValueError) as exc:
        print(f"overcommit: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
