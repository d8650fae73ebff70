"""Exact timing of fixed machine sequences under the setup-resource limit.

With the sequences fixed, the only decisions are the setup start times.  A
setup occupies one of ``R`` resource units for its whole (positive) length,
processing follows it without delay, and the next setup on the same machine
may start once processing has finished.

The search enumerates setups in non-decreasing order of start time, placing
each at the earliest moment its machine is free and a resource unit is
available.  Every schedule produced is feasible, and because both objectives
are regular the enumeration reaches an optimal (active) schedule.  Partial
schedules are bounded by chaining the remaining jobs without the resource.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .encoding import Assignment, Objective, evaluate_objective


@dataclass(frozen=True)
class TimedSchedule:
    setup_start: tuple
    setup_end: tuple
    proc_start: tuple
    proc_end: tuple
    machine: tuple
    position: tuple

    def completions(self) -> tuple:
        return self.proc_end


@dataclass(frozen=True)
class SubproblemResult:
    value: float
    schedule: TimedSchedule
    nodes: int = 0


def _chains(inst, asg: Assignment):
    """Per machine: list of (job, setup length, processing length)."""
    p, s = inst.p_list, inst.s_list
    chains = []
    for m, seq in enumerate(asg.sequences):
        chain, prev = [], None
        for j in seq:
            chain.append((j, 0 if prev is None else s[prev][j][m], p[j][m]))
            prev = j
        chains.append(chain)
    return chains


def solve_subproblem(inst, asg: Assignment, objective: Objective = "sumC",
                     cutoff: float | None = None, R: int | None = None,
                     node_limit: int | None = None) -> SubproblemResult | None:
    """Minimum objective over all feasible timings of ``asg``.

    With ``cutoff`` set, only values strictly below it are searched for and
    ``None`` is returned when none exists.
    """
    R = inst.R if R is None else R
    if R < 1:
        raise ValueError("R must be at least 1")
    chains = [c for c in _chains(inst, asg)]
    machines = [m for m, c in enumerate(chains) if c]
    chains = [chains[m] for m in machines]
    nm = len(chains)
    lens = [len(c) for c in chains]
    tardy = objective == "sumT"
    if tardy and inst.d is None:
        raise ValueError("total tardiness needs due dates")
    if objective not in ("sumC", "sumT"):
        raise ValueError(f"unknown objective {objective!r}")
    due = inst.d_list if tardy else None

    # suffix[k][q] = cumulative (setup + processing) from position q to each
    # later position, used by the resource-free bound.
    suffix = []
    for chain in chains:
        per_pos = []
        for q in range(len(chain)):
            acc, offs = 0, []
            for (j, sl, pl) in chain[q:]:
                acc += sl + pl
                offs.append((j, acc))
            per_pos.append(offs)
        suffix.append(per_pos)

    def cost(j, c):
        if tardy:
            return max(0, c - due[j])
        return c

    def rest_bound(pos, ready, floor):
        total = 0
        for k in range(nm):
            q = pos[k]
            if q == lens[k]:
                continue
            t0 = ready[k] if ready[k] > floor else floor
            if tardy:
                for j, off in suffix[k][q]:
                    c = t0 + off - due[j]
                    if c > 0:
                        total += c
            else:
                offs = suffix[k][q]
                total += t0 * len(offs) + sum(o for _, o in offs)
        return total

    best = [math.inf if cutoff is None else cutoff]
    best_starts: list = [None]
    seen: dict = {}
    nodes = [0]
    starts = [[0] * n for n in lens]

    def dfs(pos, ready, last, ends, acc):
        nodes[0] += 1
        if node_limit is not None and nodes[0] > node_limit:
            raise RuntimeError("subproblem node limit exceeded")
        if all(pos[k] == lens[k] for k in range(nm)):
            if acc < best[0]:
                best[0] = acc
                best_starts[0] = [list(st) for st in starts]
            return
        key = (pos, tuple(r if r > last else last for r in ready), last, ends)
        prev = seen.get(key)
        if prev is not None and prev <= acc:
            return
        seen[key] = acc

        children = []
        for k in range(nm):
            q = pos[k]
            if q == lens[k]:
                continue
            j, sl, pl = chains[k][q]
            t = ready[k] if ready[k] > last else last
            if sl > 0:
                active = [e for e in ends if e > t]
                if len(active) >= R:
                    t = active[len(active) - R]
                new_ends = tuple(sorted([e for e in active if e > t] + [t + sl]))
            else:
                new_ends = tuple(e for e in ends if e > t)
            c = t + sl + pl
            npos = pos[:k] + (q + 1,) + pos[k + 1:]
            nready = ready[:k] + (c,) + ready[k + 1:]
            nacc = acc + cost(j, c)
            bound = nacc + rest_bound(npos, nready, t)
            if bound < best[0]:
                children.append((bound, t, k, npos, nready, new_ends, nacc))
        children.sort(key=lambda ch: (ch[1], ch[0], ch[2]))
        for bound, t, k, npos, nready, new_ends, nacc in children:
            if bound >= best[0]:
                continue
            starts[k][npos[k] - 1] = t
            dfs(npos, nready, t, new_ends, nacc)

    dfs(tuple([0] * nm), tuple([0] * nm), 0, (), 0)
    if best_starts[0] is None:
        return None
    return SubproblemResult(best[0], _build_schedule(inst, machines, chains, best_starts[0]),
                            nodes[0])


def _build_schedule(inst, machines, chains, starts) -> TimedSchedule:
    n = inst.n_jobs
    ss, se, ps, pe = [0] * n, [0] * n, [0] * n, [0] * n
    mach, posn = [0] * n, [0] * n
    for k, chain in enumerate(chains):
        for q, (j, sl, pl) in enumerate(chain):
            t = starts[k][q]
            ss[j], se[j] = t, t + sl
            ps[j], pe[j] = t + sl, t + sl + pl
            mach[j], posn[j] = machines[k], q
    return TimedSchedule(tuple(ss), tuple(se), tuple(ps), tuple(pe), tuple(mach), tuple(posn))


def schedule_from_starts(inst, asg: Assignment, setup_starts) -> TimedSchedule:
    """Timed schedule given a setup start time for every job."""
    chains = _chains(inst, asg)
    starts = [[setup_starts[j] for j, _, _ in chain] for chain in chains]
    return _build_schedule(inst, list(range(len(chains))), chains, starts)


def schedule_value(inst, ts: TimedSchedule, objective: Objective):
    return evaluate_objective(ts.proc_end, inst.d_list if objective == "sumT" else None,
                              objective)


def verify_timed_schedule(inst, asg: Assignment, ts: TimedSchedule,
                          R: int | None = None) -> list[str]:
    """List constraint violations of ``ts``; each entry starts with the family name."""
    R = inst.R if R is None else R
    out = []
    n = inst.n_jobs
    try:
        asg.check(n, inst.n_machines)
    except ValueError as exc:
        return [f"assignment: {exc}"]
    fields = (ts.setup_start, ts.setup_end, ts.proc_start, ts.proc_end)
    if any(len(f) != n for f in fields):
        return [f"assignment: schedule does not cover {n} jobs"]
    p, s = inst.p_list, inst.s_list
    for m, seq in enumerate(asg.sequences):
        prev = None
        for j in seq:
            want = 0 if prev is None else s[prev][j][m]
            if ts.setup_start[j] < 0:
                out.append(f"nonNegative: job {j} setup starts at {ts.setup_start[j]}")
            if ts.setup_end[j] - ts.setup_start[j] != want:
                out.append(f"setupSize: job {j} setup lasts "
                           f"{ts.setup_end[j] - ts.setup_start[j]}, expected {want}")
            if ts.proc_end[j] - ts.proc_start[j] != p[j][m]:
                out.append(f"processSize: job {j} processing lasts "
                           f"{ts.proc_end[j] - ts.proc_start[j]}, expected {p[j][m]}")
            if ts.proc_start[j] != ts.setup_end[j]:
                out.append(f"startAtEnd: job {j} processing starts at {ts.proc_start[j]}, "
                           f"setup ends at {ts.setup_end[j]}")
            if prev is not None and ts.setup_start[j] < ts.proc_end[prev]:
                out.append(f"previous: job {j} setup starts at {ts.setup_start[j]} before "
                           f"job {prev} finishes at {ts.proc_end[prev]}")
            prev = j
        intervals = []
        for j in seq:
            intervals.append((ts.setup_start[j], ts.setup_end[j], j))
            intervals.append((ts.proc_start[j], ts.proc_end[j], j))
        intervals = sorted(iv for iv in intervals if iv[1] > iv[0])
        for a, b in zip(intervals, intervals[1:]):
            if b[0] < a[1]:
                out.append(f"noOverlap: machine {m} runs jobs {a[2]} and {b[2]} at time {b[0]}")
    events = []
    for j in range(n):
        if ts.setup_end[j] > ts.setup_start[j]:
            events.append((ts.setup_start[j], 1))
            events.append((ts.setup_end[j], -1))
    events.sort(key=lambda e: (e[0], e[1]))  # releases before starts at equal times
    level = 0
    for t, delta in events:
        level += delta
        if level > R:
            out.append(f"Cumulative: {level} setups run at time {t}, capacity {R}")
            break
    return out


def schedule_to_gantt(inst, asg: Assignment, ts: TimedSchedule, objective: Objective,
                      value=None) -> dict:
    """Structured record of a schedule, one entry per job in machine order."""
    return {
        "instance": inst.name,
        "R": int(inst.R),
        "objective": objective,
        "value": value if value is not None else schedule_value(inst, ts, objective),
        "machines": [
            [{"job": j, "setup": [ts.setup_start[j], ts.setup_end[j]],
              "process": [ts.proc_start[j], ts.proc_end[j]]} for j in seq]
            for seq in asg.sequences
        ],
    }


def gantt_to_schedule(doc: dict, n_jobs: int) -> tuple[Assignment, TimedSchedule]:
    seqs = [[int(e["job"]) for e in mach] for mach in doc["machines"]]
    asg = Assignment(seqs)
    ss, se, ps, pe = [0] * n_jobs, [0] * n_jobs, [0] * n_jobs, [0] * n_jobs
    mach, posn = [0] * n_jobs, [0] * n_jobs
    for m, entries in enumerate(doc["machines"]):
        for q, e in enumerate(entries):
            j = int(e["job"])
            if not 0 <= j < n_jobs:
                raise ValueError(f"job id {j} out of range")
            ss[j], se[j] = e["setup"]
            ps[j], pe[j] = e["process"]
            mach[j], posn[j] = m, q
    return asg, TimedSchedule(tuple(ss), tuple(se), tuple(ps), tuple(pe), tuple(mach), tuple(posn))
