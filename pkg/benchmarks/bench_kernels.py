"""Time the compiled kernels against their pure-Python twins.

    python benchmarks/bench_kernels.py [--repeat 3] [--jobs 1000]

Inputs are identical for both backends; outputs are compared before timing.
"""

import argparse
import timeit

import numpy as np

from overcommit import _kernels_py
from overcommit.capacity import ConstraintSpec, Variant, d_of_alpha, job_arrays
from overcommit.workload import WorkloadSpec, generate_workload, sample_usage_matrix


def cases(n_jobs, samples):
    jobs = generate_workload(WorkloadSpec(n_jobs, seed=1))
    spec = ConstraintSpec(Variant.GAUSSIAN, 0.99, 72.0)
    mu, bq, up = job_arrays(jobs, spec)
    d = d_of_alpha(spec)
    pack = (mu, bq, up, int(spec.shape), d, 0.5, 72.0, True)
    slots, m = _kernels_py.pack_online(*pack, _kernels_py.BEST_FIT, 0)
    usage = sample_usage_matrix(jobs, samples, np.random.default_rng(2))
    small = tuple(a[:12] for a in (mu, bq, up))
    sub = small + (int(spec.shape), d, 0.5, 8.0, True)
    feas = np.asarray(_kernels_py.subset_feasibility(*sub), dtype=np.uint8)
    return {
        "first-fit": ("pack_online", pack + (_kernels_py.FIRST_FIT, 0)),
        "best-fit": ("pack_online", pack + (_kernels_py.BEST_FIT, 0)),
        "subset-feasibility (12 jobs)": ("subset_feasibility", sub),
        "min-partition (12 jobs)": ("min_partition", (feas, 12)),
        f"violations ({samples} samples)": ("machine_violations",
                                            (usage, slots.astype(np.int64), m, 72.0)),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--jobs", type=int, default=1000)
    ap.add_argument("--samples", type=int, default=5000)
    args = ap.parse_args(argv)
    from overcommit import _kernels as cy

    print(f"{'kernel':<32}{'python s':>10}{'cython s':>10}{'speedup':>9}")
    for name, (fn, call) in cases(args.jobs, args.samples).items():
        py_fn, cy_fn = getattr(_kernels_py, fn), getattr(cy, fn)
        if not same(py_fn(*call), cy_fn(*call)):
            raise SystemExit(f"{name}: backends disagree")
        t_py = min(timeit.repeat(lambda: py_fn(*call), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: cy_fn(*call), number=1, repeat=args.repeat))
        print(f"{name:<32}{t_py:>10.4f}{t_cy:>10.4f}{t_py / t_cy:>8.1f}x")


if __name__ == "__main__":
    main()
