"""Solution representations.

An :class:`Assignment` lists, for every machine, the jobs it processes in
order.  The master problem sees the same solution through its slot binaries:
``x[i, j, m] = 1`` when job ``j`` sits in slot ``i`` of machine ``m`` and
``y[j, m] = 1`` when job ``j`` is on machine ``m``.  Occupied slots are
always the highest ones, so a machine holding ``k`` jobs uses slots
``n_jobs - k .. n_jobs - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

Objective = Literal["sumC", "sumT"]
OBJECTIVES = ("sumC", "sumT")


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class Assignment:
    sequences: tuple[tuple[int, ...], ...]

    def __init__(self, sequences: Sequence[Sequence[int]]):
        object.__setattr__(self, "sequences",
                           tuple(tuple(int(j) for j in seq) for seq in sequences))

    @property
    def n_machines(self) -> int:
        return len(self.sequences)

    def jobs(self) -> list[int]:
        return [j for seq in self.sequences for j in seq]

    def machine_of(self) -> dict[int, int]:
        return {j: m for m, seq in enumerate(self.sequences) for j in seq}

    def check(self, n_jobs: int, n_machines: int | None = None) -> None:
        if n_machines is not None and len(self.sequences) != n_machines:
            raise EncodingError(
                f"assignment has {len(self.sequences)} machines, expected {n_machines}")
        jobs = self.jobs()
        if sorted(jobs) != list(range(n_jobs)):
            seen, dup = set(), set()
            for j in jobs:
                (dup if j in seen else seen).add(j)
            missing = sorted(set(range(n_jobs)) - seen)
            raise EncodingError(
                f"assignment is not a permutation: duplicated={sorted(dup)}, missing={missing}, "
                f"out of range={sorted(j for j in seen if not 0 <= j < n_jobs)}")

    def __str__(self):
        return " | ".join(f"m{m}:{list(seq)}" for m, seq in enumerate(self.sequences))


@dataclass(frozen=True, eq=False)
class SlotSolution:
    x: np.ndarray  # slot x job x machine
    y: np.ndarray  # job x machine

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.uint8).copy()
        y = np.asarray(self.y, dtype=np.uint8).copy()
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def key(self) -> bytes:
        return self.x.tobytes() + self.y.tobytes()

    def __eq__(self, other):
        if not isinstance(other, SlotSolution):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)

    def __hash__(self):
        return hash(self.key())

    def violations(self) -> list[str]:
        x, y = self.x, self.y
        out = []
        per_job = x.sum(axis=(0, 2))
        for j in np.nonzero(per_job != 1)[0]:
            out.append(f"assignment: job {j} occupies {per_job[j]} slots")
        occ = x.sum(axis=1)  # slot x machine
        for i, m in zip(*np.nonzero(occ > 1)):
            out.append(f"slot capacity: slot {i} of machine {m} holds {occ[i, m]} jobs")
        for m in range(occ.shape[1]):
            col = np.minimum(occ[:, m], 1)
            if np.any(np.diff(col.astype(int)) < 0):
                out.append(f"continuity: machine {m} has an empty slot after an occupied one")
        if not np.array_equal(y, x.sum(axis=0)):
            out.append("y-link: y differs from the slot sums of x")
        return out


@dataclass(frozen=True)
class Timing:
    completion: tuple           # per job
    setup: tuple[tuple, ...]    # per machine, per position
    processing: tuple[tuple, ...]


def assignment_to_slots(inst, asg: Assignment) -> SlotSolution:
    n, nm = inst.n_jobs, inst.n_machines
    asg.check(n, nm)
    x = np.zeros((n, n, nm), dtype=np.uint8)
    y = np.zeros((n, nm), dtype=np.uint8)
    for m, seq in enumerate(asg.sequences):
        first = n - len(seq)
        for pos, j in enumerate(seq):
            x[first + pos, j, m] = 1
            y[j, m] = 1
    return SlotSolution(x, y)


def slots_to_assignment(inst, sol: SlotSolution) -> Assignment:
    n, nm = inst.n_jobs, inst.n_machines
    if sol.x.shape != (n, n, nm) or sol.y.shape != (n, nm):
        raise EncodingError(f"slot solution has shapes {sol.x.shape}/{sol.y.shape}")
    problems = sol.violations()
    if problems:
        raise EncodingError("; ".join(problems))
    seqs = []
    for m in range(nm):
        seq = []
        for i in range(n):
            js = np.nonzero(sol.x[i, :, m])[0]
            if len(js):
                seq.append(int(js[0]))
        seqs.append(seq)
    return Assignment(seqs)


def evaluate_objective(completions: Sequence[float], d: Sequence[float] | None,
                       kind: Objective):
    if kind == "sumC":
        return sum(completions)
    if kind == "sumT":
        if d is None:
            raise ValueError("total tardiness needs due dates")
        return sum(max(0, c - dj) for c, dj in zip(completions, d))
    raise ValueError(f"unknown objective {kind!r}")


def resource_free_timing(inst, asg: Assignment, objective: Objective = "sumC"):
    """Chain every machine as early as possible, ignoring the setup resource.

    Returns ``(timing, value)`` where ``value`` is the objective of the
    resulting completion times, a lower bound on the resource-constrained
    value of ``asg``.
    """
    p, s = inst.p_list, inst.s_list
    completion = [0] * inst.n_jobs
    setups, procs = [], []
    for m, seq in enumerate(asg.sequences):
        t, prev = 0, None
        su, pr = [], []
        for j in seq:
            st = 0 if prev is None else s[prev][j][m]
            t += st + p[j][m]
            completion[j] = t
            su.append(st)
            pr.append(p[j][m])
            prev = j
        setups.append(tuple(su))
        procs.append(tuple(pr))
    value = evaluate_objective(completion, inst.d_list if objective == "sumT" else None,
                               objective)
    return Timing(tuple(completion), tuple(setups), tuple(procs)), value


def resource_free_value(inst, asg: Assignment, objective: Objective = "sumC"):
    return resource_free_timing(inst, asg, objective)[1]


def symmetric_distance(a: SlotSolution, b: SlotSolution) -> int:
    """Number of (x, y) coordinates in which two slot solutions differ."""
    if a.x.shape != b.x.shape or a.y.shape != b.y.shape:
        raise ValueError(f"dimension mismatch: {a.x.shape}/{a.y.shape} vs {b.x.shape}/{b.y.shape}")
    return int(np.count_nonzero(a.x != b.x) + np.count_nonzero(a.y != b.y))
