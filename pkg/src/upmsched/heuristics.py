"""Constructive warm starts.

All three constructors ignore the setup resource and are compared on the
resource-free objective, which is what the master problem sees.
"""

from __future__ import annotations

import math

from .encoding import Assignment, Objective, resource_free_value


def _need_due_dates(inst, who: str):
    if inst.d is None:
        raise ValueError(f"{who} needs due dates")


def balanced_assignment(inst) -> list[list[int]]:
    """Jobs by descending shortest processing time, each to the least loaded machine."""
    p = inst.p_list
    order = sorted(range(inst.n_jobs), key=lambda j: (-min(p[j]), j))
    load = [0] * inst.n_machines
    groups: list[list[int]] = [[] for _ in range(inst.n_machines)]
    for j in order:
        m = min(range(inst.n_machines), key=lambda m: (load[m] + p[j][m], m))
        load[m] += p[j][m]
        groups[m].append(j)
    return groups


def gh_edd(inst) -> Assignment:
    _need_due_dates(inst, "GH-EDD")
    d = inst.d_list
    return Assignment([sorted(g, key=lambda j: (d[j], j)) for g in balanced_assignment(inst)])


def gh_slack(inst) -> Assignment:
    """Greedy on the slack ``d_j - (load_m + p_jm + s_ijm)``, smallest first.

    Machines are those of the balanced assignment; the pick is global over
    every (unscheduled job, its machine) pair.
    """
    _need_due_dates(inst, "GH-slack")
    p, s, d = inst.p_list, inst.s_list, inst.d_list
    machine = {j: m for m, g in enumerate(balanced_assignment(inst)) for j in g}
    seqs: list[list[int]] = [[] for _ in range(inst.n_machines)]
    load = [0] * inst.n_machines
    left = set(range(inst.n_jobs))
    while left:
        best = None
        for j in sorted(left):
            m = machine[j]
            setup = s[seqs[m][-1]][j][m] if seqs[m] else 0
            slack = d[j] - (load[m] + p[j][m] + setup)
            if best is None or slack < best[0]:
                best = (slack, j, m, setup)
        _, j, m, setup = best
        seqs[m].append(j)
        load[m] += p[j][m] + setup
        left.remove(j)
    return Assignment(seqs)


def atcs_index(p_jm, s_ijm, t, d_j, p_bar, s_bar, k1=2.0, k2=0.5) -> float:
    """Apparent tardiness cost with setups, unit weights.

    ``d_j=None`` drops the due-date factor.
    """
    idx = 1.0 / p_jm if p_jm > 0 else math.inf
    if d_j is not None and p_bar > 0:
        idx *= math.exp(-max(d_j - p_jm - t, 0) / (k1 * p_bar))
    if s_bar > 0:
        idx *= math.exp(-s_ijm / (k2 * s_bar))
    return idx


def atcs(inst, objective: Objective = "sumT", k1: float = 2.0, k2: float = 0.5) -> Assignment:
    """List scheduling: the earliest free machine takes the job with the largest index."""
    use_d = objective == "sumT"
    if use_d:
        _need_due_dates(inst, "ATCS for total tardiness")
    p, s = inst.p_list, inst.s_list
    d = inst.d_list if use_d else None
    n, nm = inst.n_jobs, inst.n_machines
    p_bar = sum(map(sum, p)) / (n * nm)
    offdiag = [s[i][j][m] for i in range(n) for j in range(n) if i != j for m in range(nm)]
    s_bar = sum(offdiag) / len(offdiag) if offdiag else 0.0
    free = [0] * nm
    seqs: list[list[int]] = [[] for _ in range(nm)]
    left = set(range(n))
    while left:
        m = min(range(nm), key=lambda m: (free[m], m))
        t = free[m]
        prev = seqs[m][-1] if seqs[m] else None
        best = None
        for j in sorted(left):
            setup = 0 if prev is None else s[prev][j][m]
            idx = atcs_index(p[j][m], setup, t, None if d is None else d[j], p_bar, s_bar, k1, k2)
            if best is None or idx > best[0]:
                best = (idx, j, setup)
        _, j, setup = best
        seqs[m].append(j)
        free[m] = t + setup + p[j][m]
        left.remove(j)
    return Assignment(seqs)


def spt(inst) -> Assignment:
    """Balanced assignment, each machine in shortest-processing-time order."""
    p = inst.p_list
    return Assignment([sorted(g, key=lambda j, m=m: (p[j][m], j))
                       for m, g in enumerate(balanced_assignment(inst))])


def constructors(inst, objective: Objective) -> dict:
    """Every applicable constructor's assignment, by name."""
    out = {}
    if inst.d is not None:
        out["gh_edd"] = gh_edd(inst)
        out["gh_slack"] = gh_slack(inst)
    else:
        out["spt"] = spt(inst)
    out["atcs"] = atcs(inst, objective)
    return out


def warm_start(inst, objective: Objective = "sumC") -> tuple[Assignment, float, str]:
    """Best constructor under the resource-free objective; ties go to the first listed."""
    best = None
    for name, asg in constructors(inst, objective).items():
        value = resource_free_value(inst, asg, objective)
        if best is None or value < best[1]:
            best = (asg, value, name)
    return best
