"""Brute-force ground truth for tiny instances.

Two independent paths: :func:`brute_force_optimum` enumerates every ordered
partition of the jobs over the machines and times each one with the exact
subproblem solver, while :func:`time_enumeration_value` times one assignment
by trying every integer setup start up to a horizon, with no scheduling
theory beyond a resource-free lower bound.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .encoding import Assignment, Objective, resource_free_value
from .subproblem import TimedSchedule, schedule_from_starts, solve_subproblem


class OracleRefusal(ValueError):
    """The instance is too large to enumerate."""


@dataclass(frozen=True)
class OracleResult:
    value: float
    assignment: Assignment
    schedule: TimedSchedule
    n_assignments: int


def count_assignments(n_jobs: int, n_machines: int) -> int:
    """Ordered partitions of ``n_jobs`` jobs into ``n_machines`` sequences."""
    return math.factorial(n_jobs) * math.comb(n_jobs + n_machines - 1, n_machines - 1)


def _compositions(n: int, parts: int):
    """Machine loads summing to ``n``, lexicographic."""
    if parts == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


def all_assignments(n_jobs: int, n_machines: int):
    """Every assignment, in lexicographic (permutation, loads) order."""
    loads = list(_compositions(n_jobs, n_machines))
    for perm in itertools.permutations(range(n_jobs)):
        for counts in loads:
            seqs, at = [], 0
            for c in counts:
                seqs.append(perm[at:at + c])
                at += c
            yield Assignment(seqs)


def brute_force_optimum(inst, objective: Objective = "sumC", max_jobs: int = 7,
                        R: int | None = None) -> OracleResult:
    """Global optimum over all assignments; first optimum in enumeration order."""
    if inst.n_jobs > max_jobs:
        raise OracleRefusal(
            f"{inst.n_jobs} jobs exceed the limit of {max_jobs} "
            f"({count_assignments(inst.n_jobs, inst.n_machines)} assignments)")
    best = None
    count = 0
    for asg in all_assignments(inst.n_jobs, inst.n_machines):
        count += 1
        # the resource-free value never exceeds the exact one
        if best is not None and resource_free_value(inst, asg, objective) >= best[0]:
            continue
        res = solve_subproblem(inst, asg, objective, R=R,
                               cutoff=None if best is None else best[0])
        if res is not None:
            best = (res.value, asg, res.schedule)
    return OracleResult(best[0], best[1], best[2], count)


def time_enumeration_value(inst, asg: Assignment, objective: Objective = "sumC",
                           R: int | None = None, horizon: int | None = None):
    """Optimal value of ``asg`` by enumerating integer setup start times.

    The default horizon is the sum over jobs of the largest processing time
    plus the largest incoming setup, which no job of an optimal schedule
    needs to exceed.  Returns ``(value, schedule)``.
    """
    R = inst.R if R is None else R
    p, s = inst.p_list, inst.s_list
    n, nm = inst.n_jobs, inst.n_machines
    if horizon is None:
        horizon = sum(max(p[j]) for j in range(n))
        horizon += sum(max((s[i][j][m] for i in range(n) if i != j for m in range(nm)),
                           default=0) for j in range(n))
    horizon = int(horizon)
    d = inst.d_list if objective == "sumT" else None

    # flatten: (job, machine, setup length, processing length, first on machine)
    ops = []
    for m, seq in enumerate(asg.sequences):
        prev = None
        for j in seq:
            ops.append((j, m, 0 if prev is None else s[prev][j][m], p[j][m], prev is None))
            prev = j

    def cost(j, c):
        return max(0, c - d[j]) if d is not None else c

    def rest_bound(k, t_free):
        # jobs k.. chained without the resource; the first resumes at t_free
        total, t = 0, t_free
        for j, m, sl, pl, first in ops[k:]:
            if first:
                t = 0
            t += sl + pl
            total += cost(j, t)
        return total

    usage = [0] * (horizon + 1)
    starts = [0] * n
    best = [math.inf, None]

    def dfs(k, ready, acc):
        if k == len(ops):
            if acc < best[0]:
                best[0], best[1] = acc, list(starts)
            return
        j, m, sl, pl, first = ops[k]
        if first:
            ready = 0
        for t in range(ready, horizon - sl - pl + 1):
            c = t + sl + pl
            nacc = acc + cost(j, c)
            if nacc + rest_bound(k + 1, c) >= best[0]:
                # later starts only make this job and its successors later
                break
            if sl > 0 and any(usage[u] >= R for u in range(t, t + sl)):
                continue
            for u in range(t, t + sl):
                usage[u] += 1
            starts[j] = t
            dfs(k + 1, c, nacc)
            for u in range(t, t + sl):
                usage[u] -= 1

    dfs(0, 0, 0)
    if best[1] is None:
        raise RuntimeError(f"no schedule fits in horizon {horizon}")
    return best[0], schedule_from_starts(inst, asg, best[1])
