"""Offline packing: a Local-Search 2-approximation and an exact subset-DP oracle."""

from __future__ import annotations

import enum
from typing import Optional, Sequence

import numpy as np

from overcommit import kernels
from overcommit.capacity import ConstraintSpec, LoadSummary, d_of_alpha, effective_load, job_arrays
from overcommit.online import Assignment, OversizedJobError, first_fit
from overcommit.workload import Job

EXACT_CAP = 12
GOOD_THRESHOLD = 6


class InstanceTooLarge(ValueError):
    pass


class MachineCategory(enum.Enum):
    SINGLE = "single"          # one job (A1)
    MEDIUM_ONE_NON_GOOD = "b"  # 2-4 jobs, at most one not good
    MEDIUM_MANY_NON_GOOD = "c"
    LARGE = "large"            # 5 or more jobs


class _State:
    """Mutable machine table keyed by id; ids only grow."""

    def __init__(self, assignment: Assignment, spec: ConstraintSpec):
        self.spec = spec
        self.d = d_of_alpha(spec)
        self.jobs = dict(assignment.jobs)
        self.groups = {}
        self.loads = {}
        for m in assignment.machines:
            self.groups[m.id] = list(m.jobs)
            self.loads[m.id] = LoadSummary.of((self.jobs[j] for j in m.jobs), spec)
        self.next_id = max(self.groups, default=-1) + 1

    def ids(self):
        return sorted(self.groups)

    def fits(self, mid, jid):
        load = self.loads[mid].plus(self.jobs[jid], self.spec)
        return effective_load(load, self.spec, self.d) <= self.spec.capacity

    def move(self, jid, src, dst):
        job = self.jobs[jid]
        self.groups[src].remove(jid)
        self.loads[src] = self.loads[src].minus(job, self.spec)
        self.groups[dst].append(jid)
        self.loads[dst] = self.loads[dst].plus(job, self.spec)
        if not self.groups[src]:
            del self.groups[src], self.loads[src]

    def open(self, jids):
        mid = self.next_id
        self.next_id += 1
        self.groups[mid] = list(jids)
        self.loads[mid] = LoadSummary.of((self.jobs[j] for j in jids), self.spec)
        return mid

    def singles(self):
        return [i for i in self.ids() if len(self.groups[i]) == 1]

    def a1_fits(self, jid, a1):
        return [i for i in a1 if self.fits(i, jid)]


def _scatter(state, placements):
    for jid, src, dst in placements:
        state.move(jid, src, dst)


def _distinct_targets(state, jids, a1, taken):
    """Greedy lowest-id distinct A1 targets for ``jids``; None if some job is stuck."""
    out = []
    taken = set(taken)
    for jid in jids:
        target = next((i for i in a1 if i not in taken and state.fits(i, jid)), None)
        if target is None:
            return None
        taken.add(target)
        out.append((jid, target))
    return out


def _op_move_lower(state):
    ids = state.ids()
    for pos, i in enumerate(ids):
        for jid in list(state.groups[i]):
            for k in ids[:pos]:
                if state.fits(k, jid):
                    state.move(jid, i, k)
                    return True
    return False


def _classify(state):
    a1 = state.singles()
    in_s1 = {state.groups[i][0] for i in a1}
    fit_count = {}
    good = set()
    for i in state.ids():
        if len(state.groups[i]) == 1:
            continue
        for jid in state.groups[i]:
            hits = state.a1_fits(jid, a1)
            fit_count[jid] = len(hits)
            if jid not in in_s1 and len(hits) >= GOOD_THRESHOLD:
                good.add(jid)
    return a1, good, fit_count


def _medium(state):
    return [i for i in state.ids() if 2 <= len(state.groups[i]) <= 4]


def _op_evacuate_good(state, a1, good):
    for i in _medium(state):
        jids = state.groups[i]
        if all(j in good for j in jids):
            plan = _distinct_targets(state, list(jids), a1, ())
            if plan is not None:
                _scatter(state, [(j, i, t) for j, t in plan])
                return True
    return False


def _op_evacuate_one_placeable(state, a1, good, fit_count):
    for i in _medium(state):
        jids = state.groups[i]
        odd = [j for j in jids if j not in good]
        if len(odd) != 1 or fit_count[odd[0]] == 0:
            continue
        j = odd[0]
        first = next(k for k in a1 if state.fits(k, j))
        plan = _distinct_targets(state, [x for x in jids if x != j], a1, (first,))
        if plan is not None:
            _scatter(state, [(j, i, first)] + [(x, i, t) for x, t in plan])
            return True
    return False


def _op_merge_critical(state, a1, good, fit_count):
    critical = []
    for i in _medium(state):
        odd = [j for j in state.groups[i] if j not in good]
        if len(odd) == 1 and fit_count[odd[0]] == 0:
            critical.append((i, odd[0]))
    for x in range(len(critical)):
        for y in range(x + 1, len(critical)):
            (i1, j1), (i2, j2) = critical[x], critical[y]
            pair = LoadSummary.of((state.jobs[j1], state.jobs[j2]), state.spec)
            if effective_load(pair, state.spec, state.d) > state.spec.capacity:
                continue
            rest = [(j, i1) for j in state.groups[i1] if j != j1]
            rest += [(j, i2) for j in state.groups[i2] if j != j2]
            plan = _distinct_targets(state, [j for j, _ in rest], a1, ())
            if plan is None:
                continue
            state.groups[i1].remove(j1)
            state.groups[i2].remove(j2)
            for mid, jid in ((i1, j1), (i2, j2)):
                state.loads[mid] = state.loads[mid].minus(state.jobs[jid], state.spec)
            state.open([j1, j2])
            _scatter(state, [(j, src, t) for (j, src), (_, t) in zip(rest, plan)])
            return True
    return False


def local_search(initial: Assignment, spec: Optional[ConstraintSpec] = None,
                 max_operations: Optional[int] = None) -> Assignment:
    """Apply the four update operations until none applies.

    Operations are tried in order (move to a lower id, evacuate an all-good
    medium machine, evacuate a medium machine with one A1-placeable job,
    merge two critical machines) and the scan restarts after every success.
    Whenever several A1 machines fit, the lowest id is used.  The number of
    operations performed is stored in ``result.stats["operations"]``.
    """
    spec = spec or initial.spec
    initial.check()
    n = len(initial.jobs)
    limit = n ** 3 if max_operations is None else max_operations
    state = _State(initial, spec)
    ops = {"move": 0, "evacuate": 0, "evacuate-one": 0, "merge": 0}
    total = 0
    while True:
        if _op_move_lower(state):
            ops["move"] += 1
        else:
            a1, good, fit_count = _classify(state)
            if _op_evacuate_good(state, a1, good):
                ops["evacuate"] += 1
            elif _op_evacuate_one_placeable(state, a1, good, fit_count):
                ops["evacuate-one"] += 1
            elif _op_merge_critical(state, a1, good, fit_count):
                ops["merge"] += 1
            else:
                break
        total += 1
        if total > limit:
            raise RuntimeError(f"local search exceeded {limit} operations")

    groups = [[state.jobs[j] for j in state.groups[i]] for i in state.ids()]
    result = Assignment.from_groups(groups, spec, "local-search", arrival=initial.arrival)
    result.stats.update(operations=total, by_operation=ops,
                        initial_machines=initial.n_machines)
    return result


def categorize(assignment: Assignment):
    """Map machine id to its :class:`MachineCategory` under the current assignment."""
    state = _State(assignment, assignment.spec)
    a1, good, _ = _classify(state)
    out = {}
    for i in state.ids():
        jids = state.groups[i]
        if len(jids) == 1:
            out[i] = MachineCategory.SINGLE
        elif len(jids) >= 5:
            out[i] = MachineCategory.LARGE
        elif sum(j not in good for j in jids) <= 1:
            out[i] = MachineCategory.MEDIUM_ONE_NON_GOOD
        else:
            out[i] = MachineCategory.MEDIUM_MANY_NON_GOOD
    return out


def local_search_from_jobs(jobs: Sequence[Job], spec: ConstraintSpec) -> Assignment:
    """Local-Search seeded with the First-Fit packing of ``jobs``."""
    return local_search(first_fit(jobs, spec), spec)


def exact_optimal(jobs: Sequence[Job], spec: ConstraintSpec, cap: int = EXACT_CAP):
    """Minimum machine count by DP over subsets; returns ``(count, assignment)``."""
    jobs = list(jobs)
    n = len(jobs)
    if n > cap:
        raise InstanceTooLarge(f"instance too large for exact oracle ({n} jobs > cap {cap})")
    if n == 0:
        return 0, Assignment.from_groups([], spec, "exact")
    mu, bq, up = job_arrays(jobs, spec)
    feas = kernels.subset_feasibility(mu, bq, up, int(spec.shape), d_of_alpha(spec),
                                      float(spec.exponent), float(spec.capacity), bool(spec.clip))
    for k in range(n):
        if not feas[1 << k]:
            raise OversizedJobError(jobs[k], spec)
    count, choice = kernels.min_partition(np.ascontiguousarray(feas, dtype=np.uint8), n)
    groups, mask = [], (1 << n) - 1
    while mask:
        block = int(choice[mask])
        groups.append([jobs[k] for k in range(n) if block >> k & 1])
        mask ^= block
    return count, Assignment.from_groups(groups, spec, "exact", arrival=[j.id for j in jobs])
