"""Branch-and-Check drivers.

The master (machine assignment and sequencing without the setup resource)
proposes integer solutions; each one is timed exactly under the resource
limit and then removed from the master by a cut.

``alg1`` removes every proposal with a no-good cut.  ``alg2`` does the same
for proposals that improve the upper bound; a proposal that does not improve
it has its whole 4-OPT neighbourhood searched for a better schedule and is
removed together with that neighbourhood by a local-branching cut.

Two modes drive the master:

``iter``
    Solve the master to optimality, treat its optimum as the new integer
    solution, add the cut, repeat.  Works with any backend.
``bnc``
    Solve the master once; the backend calls back on every integer point it
    finds and the cuts are injected into the running search.  Needs a backend
    with lazy-cut support.
"""

from __future__ import annotations

import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Literal

from .encoding import Assignment, Objective, assignment_to_slots
from .heuristics import warm_start as build_warm_start
from .master import Cut, build_master, local_branching_cut, nogood_cut
from .neighbourhood import ExplorationStats, explore_neighbourhood_best
from .solver import BACKENDS, CapabilityError, IncumbentEvent, get_backend, solve
from .subproblem import TimedSchedule, solve_subproblem

log = logging.getLogger(__name__)

Algorithm = Literal["alg1", "alg2"]
Mode = Literal["bnc", "iter"]


@dataclass(frozen=True)
class RunConfig:
    algorithm: Algorithm = "alg1"
    mode: Mode = "iter"
    objective: Objective = "sumC"
    time_limit_s: float | None = 3600.0
    use_valid_inequalities: bool = True
    warm_start: bool = True
    kopt_extension: int | None = None
    seed: int = 0
    backend: str = "fallback"
    parallelism: int = 1

    def validate(self) -> None:
        if self.algorithm not in ("alg1", "alg2"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.mode not in ("bnc", "iter"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.objective not in ("sumC", "sumT"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.kopt_extension not in (None, 6, 8):
            raise ValueError(f"kopt_extension must be none, 6 or 8, got {self.kopt_extension!r}")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown solver backend {self.backend!r}")
        if self.mode == "bnc" and not get_backend(self.backend).capabilities.supports_lazy_cuts:
            raise CapabilityError(f"backend {self.backend!r} cannot run bnc mode")

    @property
    def neighbourhood_k(self) -> int:
        return self.kopt_extension or 4


@dataclass(frozen=True)
class CutRecord:
    """A cut together with the master solution it was derived from."""

    kind: str
    cut: Cut
    reference: Assignment
    zeta: float | None   # exact value of the reference, None if not below UB
    ub_after: float


@dataclass
class RunResult:
    LB: float
    UB: float
    gap_pct: float
    wall_time_s: float
    n_integer_solutions: int
    cuts_added: dict
    incumbent: Assignment | None
    schedule: TimedSchedule | None
    status: str
    cut_ledger: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    exploration: ExplorationStats = field(default_factory=ExplorationStats)
    model_stats: dict = field(default_factory=dict)


def compute_gap(LB: float, UB: float, tol: float = 1e-9) -> float:
    """Relative gap ``100 (UB - LB) / UB``, clamped at 0."""
    if UB == 0:
        if LB <= tol:
            return 0.0
        raise ValueError(f"lower bound {LB} above a zero upper bound")
    if math.isinf(UB):
        return math.inf
    if LB > UB + tol * max(1.0, abs(UB)):
        raise ValueError(f"lower bound {LB} exceeds upper bound {UB}")
    return max(0.0, 100.0 * (UB - LB) / UB)


class _Driver:
    def __init__(self, inst, cfg: RunConfig):
        cfg.validate()
        self.inst = inst
        self.cfg = cfg
        self.start = time.perf_counter()
        self.deadline = math.inf if cfg.time_limit_s is None else self.start + cfg.time_limit_s
        self.master = build_master(inst, cfg.objective, valid_ineq=cfg.use_valid_inequalities,
                                   with_y=cfg.algorithm == "alg2")
        self.integral = self.master.model.objective_integral
        self.UB = math.inf
        self.LB = 0.0
        self.incumbent: Assignment | None = None
        self.schedule: TimedSchedule | None = None
        self.n_int = 0
        self.ledger: list[CutRecord] = []
        self.trace: list[dict] = []
        self.explore_stats = ExplorationStats()

    def remaining(self) -> float:
        return self.deadline - time.perf_counter()

    def round_lb(self, z: float) -> float:
        return math.ceil(z - 1e-6) if self.integral else z

    def closed(self) -> bool:
        if self.integral:
            return self.UB - self.LB < 1
        return self.UB - self.LB <= 1e-9 * max(1.0, abs(self.UB))

    def update(self, value, asg, schedule, source):
        self.UB = value
        self.incumbent = asg
        self.schedule = schedule
        self.trace.append({"event": "incumbent", "source": source, "UB": value,
                           "LB": self.LB, "t": time.perf_counter() - self.start})

    def warm(self):
        if not self.cfg.warm_start:
            return
        if self.cfg.objective == "sumT" and self.inst.d is None:
            return
        asg, rf_value, name = build_warm_start(self.inst, self.cfg.objective)
        res = solve_subproblem(self.inst, asg, self.cfg.objective)
        self.update(res.value, asg, res.schedule, f"warm:{name}")

    def record(self, kind, cut, asg, zeta):
        self.ledger.append(CutRecord(kind, cut, asg, zeta, self.UB))

    def handle(self, z: float, values) -> list:
        """Process one integer master solution; return the cuts to add."""
        self.n_int += 1
        sol, asg = self.master.extract_solution(values)
        entry = {"event": "integer", "n": self.n_int, "z": z, "UB_before": self.UB}
        res = solve_subproblem(self.inst, asg, self.cfg.objective, cutoff=self.UB)
        entry["zeta"] = None if res is None else res.value
        if res is not None:
            self.update(res.value, asg, res.schedule, "master")
            cut = nogood_cut(sol)
            self.record("nogood", cut, asg, res.value)
        elif self.cfg.algorithm == "alg1":
            cut = nogood_cut(sol)
            self.record("nogood", cut, asg, None)
        else:
            k = self.cfg.neighbourhood_k
            ex = explore_neighbourhood_best(self.inst, asg, self.cfg.objective, self.UB,
                                            parallelism=self.cfg.parallelism,
                                            kopt=self.cfg.kopt_extension)
            for f in ("neighbours", "pruned", "solved", "improved"):
                setattr(self.explore_stats, f,
                        getattr(self.explore_stats, f) + getattr(ex.stats, f))
            self.explore_stats.wall_time += ex.stats.wall_time
            entry["eta"] = ex.value
            if ex.value is not None:
                self.update(ex.value, ex.assignment, ex.schedule, f"neighbour:{ex.move.kind}")
            cut = local_branching_cut(sol, k)
            self.record("local_branching", cut, asg, None)
        entry["cut"] = cut.kind
        entry["UB_after"] = self.UB
        self.trace.append(entry)
        log.debug("integer solution %d: z=%s zeta=%s UB=%s cut=%s", self.n_int, z,
                  entry["zeta"], self.UB, cut.kind)
        return [cut]

    def run_iter(self) -> str:
        while True:
            if self.closed():
                return "optimal"
            left = self.remaining()
            if left <= 0:
                return "limit"
            out = solve(self.master.model, self.cfg.backend, time_limit=left, cutoff=self.UB)
            if out.status == "infeasible":
                self.LB = self.UB
                return "optimal" if math.isfinite(self.UB) else "infeasible"
            if out.status == "limit":
                if math.isfinite(out.dual_bound):
                    self.LB = max(self.LB, min(self.round_lb(out.dual_bound), self.UB))
                return "limit"
            self.LB = max(self.LB, min(self.round_lb(out.objective), self.UB))
            self.trace.append({"event": "master", "z": out.objective, "LB": self.LB,
                               "t": time.perf_counter() - self.start})
            if self.closed():
                return "optimal"
            for cut in self.handle(out.objective, out.values):
                self.master.add_cut(cut)

    def run_bnc(self) -> str:
        def hook(event: IncumbentEvent):
            cuts = self.handle(event.objective, event.values)
            event.cutoff = min(event.cutoff, self.UB)
            return [self.master.linearize(c) for c in cuts]

        left = self.remaining()
        if left <= 0:
            return "limit"
        out = solve(self.master.model, self.cfg.backend, time_limit=left,
                    incumbent_hook=hook, cutoff=self.UB)
        for rec in self.ledger[len(self.master.cuts):]:
            self.master.cuts.append(rec.cut)
        if out.status == "limit":
            if math.isfinite(out.dual_bound):
                self.LB = max(self.LB, min(self.round_lb(out.dual_bound), self.UB))
            return "limit"
        self.LB = self.UB
        return "optimal" if math.isfinite(self.UB) else "infeasible"

    def run(self) -> RunResult:
        self.warm()
        status = self.run_iter() if self.cfg.mode == "iter" else self.run_bnc()
        if status == "optimal" and self.closed():
            self.LB = self.UB
        gap = compute_gap(self.LB, self.UB) if math.isfinite(self.UB) else math.inf
        cuts = Counter(rec.kind for rec in self.ledger)
        return RunResult(self.LB, self.UB, gap, time.perf_counter() - self.start, self.n_int,
                         dict(cuts), self.incumbent, self.schedule, status, self.ledger,
                         self.trace, self.explore_stats, self.master.model.stats())


def solve_algorithm1(inst, cfg: RunConfig) -> RunResult:
    if cfg.algorithm != "alg1":
        raise ValueError("solve_algorithm1 needs algorithm='alg1'")
    return _Driver(inst, cfg).run()


def solve_algorithm2(inst, cfg: RunConfig) -> RunResult:
    if cfg.algorithm != "alg2":
        raise ValueError("solve_algorithm2 needs algorithm='alg2'")
    return _Driver(inst, cfg).run()


def run(inst, cfg: RunConfig) -> RunResult:
    return (solve_algorithm1 if cfg.algorithm == "alg1" else solve_algorithm2)(inst, cfg)


def reference_slots(inst, rec: CutRecord):
    """Slot encoding of a ledger entry's reference solution."""
    return assignment_to_slots(inst, rec.reference)
