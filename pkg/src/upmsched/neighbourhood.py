"""k-OPT neighbourhoods of an assignment and their best member.

Distances are measured on the slot encoding: a job that keeps its machine but
changes slot flips two ``x`` coordinates, a job that changes machine flips two
``x`` and two ``y`` coordinates.  Every distance is therefore even, and the
4-OPT ball around a reference holds exactly the reference, its internal swaps
and its starting-job shifts.

The 6-OPT shell is larger than the internal 3-swaps alone: a job can change
machine at cost 6 if exactly one other job changes slot to keep both
machines contiguous (see :func:`enumerate_repaired_transfers`).  For 8-OPT
the named families are completed by :func:`hamming_ball`, with leftovers reported as ``ball_extra``.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .encoding import Assignment, Objective, resource_free_value
from .subproblem import TimedSchedule, solve_subproblem

MOVE_KINDS = (
    "internal_swap", "starting_job_shift", "internal_3swap", "repaired_transfer",
    "internal_4swap", "external_swap", "double_swap", "double_shift", "swap_plus_shift",
    "ball_extra",
)


@dataclass(frozen=True)
class Move:
    kind: str
    machines: tuple
    positions: tuple = ()
    jobs: tuple = ()

    def __str__(self):
        return f"{self.kind}(m={list(self.machines)}, pos={list(self.positions)}, jobs={list(self.jobs)})"


def _seqs(asg: Assignment) -> list[list[int]]:
    return [list(seq) for seq in asg.sequences]


def _n_jobs(asg: Assignment) -> int:
    return sum(len(seq) for seq in asg.sequences)


def _slot_map(asg: Assignment, n: int) -> dict:
    out = {}
    for m, seq in enumerate(asg.sequences):
        first = n - len(seq)
        for q, j in enumerate(seq):
            out[j] = (first + q, m)
    return out


def assignment_distance(a: Assignment, b: Assignment) -> int:
    """Symmetric distance between the slot encodings of two assignments."""
    n = _n_jobs(a)
    if _n_jobs(b) != n or a.n_machines != b.n_machines:
        raise ValueError("assignments cover different jobs or machines")
    sa, sb = _slot_map(a, n), _slot_map(b, n)
    dist = 0
    for j, (slot, m) in sa.items():
        slot_b, m_b = sb[j]
        if m != m_b:
            dist += 4
        elif slot != slot_b:
            dist += 2
    return dist


def enumerate_internal_swaps(asg: Assignment) -> list[tuple[Move, Assignment]]:
    out = []
    for m, seq in enumerate(asg.sequences):
        for a, b in itertools.combinations(range(len(seq)), 2):
            seqs = _seqs(asg)
            seqs[m][a], seqs[m][b] = seqs[m][b], seqs[m][a]
            out.append((Move("internal_swap", (m,), (a, b), (seq[a], seq[b])), Assignment(seqs)))
    return out


def enumerate_starting_job_shifts(asg: Assignment) -> list[tuple[Move, Assignment]]:
    out = []
    nm = asg.n_machines
    for m in range(nm):
        if not asg.sequences[m]:
            continue
        j = asg.sequences[m][0]
        for m2 in range(nm):
            if m2 == m:
                continue
            seqs = _seqs(asg)
            seqs[m].pop(0)
            seqs[m2].insert(0, j)
            out.append((Move("starting_job_shift", (m, m2), (0, 0), (j,)), Assignment(seqs)))
    return out


def enumerate_internal_rotations(asg: Assignment, h: int) -> list[tuple[Move, Assignment]]:
    """Cyclic h-swaps on one machine: every job of the chosen positions moves."""
    kind = {3: "internal_3swap", 4: "internal_4swap"}.get(h, f"internal_{h}swap")
    out = []
    for m, seq in enumerate(asg.sequences):
        for pos in itertools.combinations(range(len(seq)), h):
            # each h-cycle once: fix the first position, permute the rest
            for tail in itertools.permutations(pos[1:]):
                cycle = (pos[0],) + tail
                seqs = _seqs(asg)
                for a, b in zip(cycle, cycle[1:] + cycle[:1]):
                    seqs[m][b] = seq[a]
                out.append((Move(kind, (m,), cycle, tuple(seq[p] for p in cycle)),
                            Assignment(seqs)))
    return out


def enumerate_repaired_transfers(asg: Assignment) -> list[tuple[Move, Assignment]]:
    """Distance-6 transfers of one job to another machine.

    Either a non-first job of ``m`` becomes the first job of ``m2`` while the
    first job of ``m`` takes over its old slot, or the first job of ``m``
    takes the slot of some job of ``m2``, which moves to the head of ``m2``.
    """
    out = []
    nm = asg.n_machines
    for m in range(nm):
        seq = asg.sequences[m]
        for m2 in range(nm):
            if m2 == m:
                continue
            for q in range(1, len(seq)):
                seqs = _seqs(asg)
                j = seq[q]
                seqs[m][q] = seq[0]
                seqs[m].pop(0)
                seqs[m2].insert(0, j)
                out.append((Move("repaired_transfer", (m, m2), (q, 0), (j,)), Assignment(seqs)))
            if not seq:
                continue
            j = seq[0]
            for r, k in enumerate(asg.sequences[m2]):
                seqs = _seqs(asg)
                seqs[m].pop(0)
                seqs[m2][r] = j
                seqs[m2].insert(0, k)
                out.append((Move("repaired_transfer", (m, m2), (0, r), (j, k)), Assignment(seqs)))
    return out


def _external_swaps(asg: Assignment):
    out = []
    seqs0 = asg.sequences
    for m, m2 in itertools.combinations(range(asg.n_machines), 2):
        for a, j in enumerate(seqs0[m]):
            for b, j2 in enumerate(seqs0[m2]):
                seqs = _seqs(asg)
                seqs[m][a], seqs[m2][b] = j2, j
                out.append((Move("external_swap", (m, m2), (a, b), (j, j2)), Assignment(seqs)))
    return out


def _compose(kind, first, second):
    out = []
    for mv1, a1 in first:
        for mv2, a2 in second(a1):
            out.append((Move(kind, mv1.machines + mv2.machines, mv1.positions + mv2.positions,
                             mv1.jobs + mv2.jobs), a2))
    return out


def _dedup(asg: Assignment, moves, k: int, exclude=()):
    seen = {asg.sequences, *exclude}
    out = []
    for mv, a in moves:
        if a.sequences in seen or assignment_distance(asg, a) != k:
            continue
        seen.add(a.sequences)
        out.append((mv, a))
    return out


def hamming_ball(asg: Assignment, k: int) -> list[Assignment]:
    """Every assignment whose slot encoding lies within distance ``k`` of ``asg``."""
    n = _n_jobs(asg)
    nm = asg.n_machines
    ref = _slot_map(asg, n)
    out = []
    seqs: list[list[int]] = [[] for _ in range(nm)]
    used = [False] * n

    def fill(m, remaining, budget):
        if m == nm:
            if remaining == 0:
                out.append(Assignment(seqs))
            return
        lo = remaining if m == nm - 1 else 0
        for count in range(lo, remaining + 1):
            first = n - count
            place(m, count, 0, first, remaining, budget)

    def place(m, count, q, first, remaining, budget):
        if q == count:
            fill(m + 1, remaining - count, budget)
            return
        slot = first + q
        for j in range(n):
            if used[j]:
                continue
            rs, rm = ref[j]
            c = 0 if (rs, rm) == (slot, m) else (2 if rm == m else 4)
            if c > budget:
                continue
            used[j] = True
            seqs[m].append(j)
            place(m, count, q + 1, first, remaining, budget - c)
            seqs[m].pop()
            used[j] = False

    fill(0, n, k)
    return out


def enumerate_kopt_extensions(asg: Assignment, k: int) -> list[tuple[Move, Assignment]]:
    """Neighbours at distance exactly ``k`` (6 or 8), duplicates removed."""
    if k == 6:
        moves = enumerate_internal_rotations(asg, 3) + enumerate_repaired_transfers(asg)
        return _dedup(asg, moves, 6)
    if k == 8:
        swaps = enumerate_internal_swaps
        shifts = enumerate_starting_job_shifts
        moves = (_compose("double_swap", swaps(asg), swaps)
                 + _compose("double_shift", shifts(asg), shifts)
                 + _compose("swap_plus_shift", swaps(asg), shifts)
                 + _compose("swap_plus_shift", shifts(asg), swaps)
                 + enumerate_internal_rotations(asg, 4)
                 + _external_swaps(asg))
        named = _dedup(asg, moves, 8)
        have = {a.sequences for _, a in named}
        extra = [(Move("ball_extra", ()), a) for a in hamming_ball(asg, 8)
                 if a.sequences not in have and assignment_distance(asg, a) == 8]
        return named + extra
    raise ValueError(f"k must be 6 or 8, got {k}")


def neighbourhood(asg: Assignment, kopt: int | None = None) -> list[tuple[Move, Assignment]]:
    """4-OPT neighbours (reference excluded), optionally widened to 6 or 8."""
    out = enumerate_internal_swaps(asg) + enumerate_starting_job_shifts(asg)
    if kopt in (6, 8):
        out += enumerate_kopt_extensions(asg, 6)
        if kopt == 8:
            out += enumerate_kopt_extensions(asg, 8)
    elif kopt not in (None, 4):
        raise ValueError(f"unsupported neighbourhood size {kopt}")
    return out


@dataclass
class ExplorationStats:
    neighbours: int = 0
    pruned: int = 0
    solved: int = 0
    improved: int = 0
    wall_time: float = 0.0


@dataclass
class ExplorationResult:
    value: float | None
    assignment: Assignment | None
    schedule: TimedSchedule | None
    move: Move | None
    stats: ExplorationStats = field(default_factory=ExplorationStats)

    def __iter__(self):
        yield self.value
        yield self.assignment


def _solve_one(args):
    inst, asg, objective, cutoff = args
    res = solve_subproblem(inst, asg, objective, cutoff=cutoff)
    return None if res is None else (res.value, res.schedule)


def explore_neighbourhood_best(inst, asg_ref: Assignment, objective: Objective, UB: float,
                               parallelism: int = 1, prune: bool = True,
                               kopt: int | None = None) -> ExplorationResult:
    """Best neighbour of ``asg_ref`` with an exact value strictly below ``UB``.

    Neighbours are visited in ascending resource-free value; with ``prune``
    set, a neighbour whose resource-free value already reaches the running
    cutoff is skipped.  Returns a result with ``value is None`` when no
    neighbour beats ``UB``.
    """
    t0 = time.perf_counter()
    stats = ExplorationStats()
    moves = neighbourhood(asg_ref, kopt)
    stats.neighbours = len(moves)
    ranked = sorted(((resource_free_value(inst, a, objective), idx, mv, a)
                     for idx, (mv, a) in enumerate(moves)), key=lambda r: (r[0], r[1]))
    cutoff = math.inf if UB is None else UB
    best = (None, None, None, None)

    if not prune:
        for _, _, mv, a in ranked:
            res = solve_subproblem(inst, a, objective)
            stats.solved += 1
            if res.value < cutoff:
                cutoff = res.value
                best = (res.value, a, res.schedule, mv)
                stats.improved += 1
        stats.wall_time = time.perf_counter() - t0
        return ExplorationResult(*best, stats=stats)

    if parallelism <= 1:
        for pos, (lb, _, mv, a) in enumerate(ranked):
            if lb >= cutoff:
                stats.pruned += len(ranked) - pos
                break
            res = solve_subproblem(inst, a, objective, cutoff=cutoff)
            stats.solved += 1
            if res is not None:
                cutoff = res.value
                best = (res.value, a, res.schedule, mv)
                stats.improved += 1
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            pos = 0
            while pos < len(ranked):
                wave = []
                while pos < len(ranked) and len(wave) < parallelism:
                    lb, _, mv, a = ranked[pos]
                    if lb >= cutoff:
                        break
                    wave.append((mv, a))
                    pos += 1
                if not wave:
                    stats.pruned += len(ranked) - pos
                    break
                results = pool.map(_solve_one, [(inst, a, objective, cutoff) for _, a in wave])
                for (mv, a), res in zip(wave, results):
                    stats.solved += 1
                    if res is not None and res[0] < cutoff:
                        cutoff = res[0]
                        best = (res[0], a, res[1], mv)
                        stats.improved += 1
    stats.wall_time = time.perf_counter() - t0
    return ExplorationResult(*best, stats=stats)
