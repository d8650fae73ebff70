"""Position-based master MILP and the cuts fed back into it.

Each machine owns ``n_jobs`` slots; ``x[i, j, m]`` puts job ``j`` in slot
``i`` of machine ``m``.  Slot processing, setup and completion times are
continuous.  The master ignores the setup resource, so at an integer point its
objective equals the resource-free value of the encoded assignment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encoding import Assignment, Objective, SlotSolution, slots_to_assignment, EncodingError
from .instance import max_predecessor_setup, min_successor_setup
from .solver import LinearConstraint, Model


@dataclass(frozen=True)
class Cut:
    """``sum_{v in support} (1 - v) >= rhs`` over master binaries.

    Support entries are ``("x", i, j, m)`` or ``("y", j, m)``.
    """

    kind: str  # "nogood" | "local_branching"
    support: tuple
    rhs: int

    def lhs(self, sol: SlotSolution) -> int:
        total = 0
        for key in self.support:
            val = sol.x[key[1:]] if key[0] == "x" else sol.y[key[1:]]
            total += 1 - int(val)
        return total

    def is_satisfied(self, sol: SlotSolution) -> bool:
        return self.lhs(sol) >= self.rhs

    def linear_form(self) -> tuple[dict, str, int]:
        """Expanded form ``sum -v >= rhs - |support|``."""
        return {key: -1 for key in self.support}, ">=", self.rhs - len(self.support)

    def projected_form(self, n_jobs: int) -> tuple[dict, str, int]:
        """Same cut over ``x`` only, with ``y[j, m]`` replaced by ``sum_i x[i, j, m]``."""
        terms: dict = {}
        for key in self.support:
            if key[0] == "x":
                terms[key] = terms.get(key, 0) - 1
            else:
                _, j, m = key
                for i in range(n_jobs):
                    k = ("x", i, j, m)
                    terms[k] = terms.get(k, 0) - 1
        return terms, ">=", self.rhs - len(self.support)


def evaluate_form(form, sol: SlotSolution) -> int:
    terms, _, _ = form
    return sum(c * int(sol.x[k[1:]] if k[0] == "x" else sol.y[k[1:]])
               for k, c in terms.items())


def _x_support(sol: SlotSolution) -> list:
    return [("x", int(i), int(j), int(m)) for i, j, m in zip(*np.nonzero(sol.x))]


def nogood_cut(sol: SlotSolution) -> Cut:
    """Cut off exactly this slot solution."""
    return Cut("nogood", tuple(_x_support(sol)), 1)


def local_branching_cut(sol: SlotSolution, k: int = 4) -> Cut:
    """Cut off every solution within symmetric distance ``k`` of ``sol``.

    ``k`` is even; the cut keeps solutions whose left-hand side is at least
    ``k / 2 + 1`` (3 for the 4-OPT neighbourhood).
    """
    if sol.y is None:
        raise ValueError("local branching cut needs the y variables")
    if k % 2:
        raise ValueError("k must be even")
    ys = [("y", int(j), int(m)) for j, m in zip(*np.nonzero(sol.y))]
    return Cut("local_branching", tuple(ys + _x_support(sol)), k // 2 + 1)


@dataclass
class MasterModel:
    model: Model
    n_jobs: int
    n_machines: int
    objective: Objective
    with_y: bool
    valid_ineq: bool
    x: np.ndarray          # ids, slot x job x machine
    y: np.ndarray | None   # ids, job x machine
    P: np.ndarray          # ids, slot x machine
    S: np.ndarray
    C: np.ndarray
    D: np.ndarray | None = None
    T: np.ndarray | None = None
    cuts: list = field(default_factory=list)

    def var_id(self, key) -> int:
        if key[0] == "x":
            return int(self.x[key[1:]])
        if key[0] == "y":
            if self.y is None:
                raise ValueError("master was built without y variables")
            return int(self.y[key[1:]])
        raise KeyError(key)

    def linearize(self, cut: Cut) -> LinearConstraint:
        if self.y is None and any(k[0] == "y" for k in cut.support):
            form = cut.projected_form(self.n_jobs)
        else:
            form = cut.linear_form()
        terms, sense, rhs = form
        return LinearConstraint({self.var_id(k): c for k, c in terms.items()}, sense, rhs)

    def add_cut(self, cut: Cut) -> LinearConstraint:
        lc = self.linearize(cut)
        self.model.add_constraint(lc.terms, lc.sense, lc.rhs)
        self.cuts.append(cut)
        return lc

    def extract_solution(self, values) -> tuple[SlotSolution, Assignment]:
        values = np.asarray(values, dtype=float)
        x = (values[self.x] > 0.5).astype(np.uint8)
        y = x.sum(axis=0).astype(np.uint8)
        if self.y is not None:
            y_raw = (values[self.y] > 0.5).astype(np.uint8)
            if not np.array_equal(y_raw, y):
                raise EncodingError("rounded y disagrees with the slot sums of x")
        sol = SlotSolution(x, y)
        return sol, slots_to_assignment(self, sol)


def extract_solution(master: MasterModel, values) -> tuple[SlotSolution, Assignment]:
    return master.extract_solution(values)


def build_master(inst, objective: Objective = "sumC", valid_ineq: bool = True,
                 with_y: bool = False) -> MasterModel:
    n, nm = inst.n_jobs, inst.n_machines
    if objective == "sumT" and inst.d is None:
        raise ValueError("total tardiness master needs due dates")
    if objective not in ("sumC", "sumT"):
        raise ValueError(f"unknown objective {objective!r}")
    p = inst.p_list
    s = inst.s_list
    big_v = max_predecessor_setup(inst).tolist()
    model = Model(f"master[{inst.name}]")

    x = np.empty((n, n, nm), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            for m in range(nm):
                x[i, j, m] = model.add_var("binary", name=f"x[{i},{j},{m}]")
    y = None
    if with_y:
        y = np.empty((n, nm), dtype=np.int64)
        for j in range(n):
            for m in range(nm):
                y[j, m] = model.add_var("binary", name=f"y[{j},{m}]")
    P = np.empty((n, nm), dtype=np.int64)
    S = np.empty((n, nm), dtype=np.int64)
    C = np.empty((n, nm), dtype=np.int64)
    for i in range(n):
        for m in range(nm):
            P[i, m] = model.add_var(name=f"P[{i},{m}]")
            S[i, m] = model.add_var(name=f"S[{i},{m}]")
            C[i, m] = model.add_var(name=f"C[{i},{m}]")

    add = model.add_constraint
    for j in range(n):
        add({x[i, j, m]: 1 for i in range(n) for m in range(nm)}, "==", 1)
    for i in range(n):
        for m in range(nm):
            add({x[i, j, m]: 1 for j in range(n)}, "<=", 1)
            terms = {P[i, m]: 1}
            terms.update({x[i, j, m]: -p[j][m] for j in range(n)})
            add(terms, "==", 0)
    for i in range(1, n):
        for m in range(nm):
            for j in range(n):
                # sum_k s[k,j,m] x[i-1,k,m] - S[i,m] <= V (1 - x[i,j,m])
                terms = {x[i - 1, k, m]: s[k][j][m] for k in range(n) if k != j}
                terms[S[i, m]] = -1
                terms[x[i, j, m]] = big_v[j][m]
                add(terms, "<=", big_v[j][m])
    for m in range(nm):
        add({C[0, m]: 1, P[0, m]: -1, S[0, m]: -1}, "==", 0)
        for i in range(1, n):
            add({C[i, m]: 1, C[i - 1, m]: -1, P[i, m]: -1, S[i, m]: -1}, "==", 0)
            terms = {x[i, j, m]: 1 for j in range(n)}
            for j in range(n):
                terms[x[i - 1, j, m]] = -1
            add(terms, ">=", 0)
    if valid_ineq and n >= 2:
        s_min = min_successor_setup(inst).tolist()
        for i in range(1, n):
            for m in range(nm):
                terms = {x[i - 1, j, m]: -s_min[j][m] for j in range(n)}
                terms[S[i, m]] = 1
                add(terms, ">=", 0)
    if with_y:
        for j in range(n):
            for m in range(nm):
                terms = {x[i, j, m]: 1 for i in range(n)}
                terms[y[j, m]] = -1
                add(terms, "==", 0)

    D = T = None
    if objective == "sumC":
        model.set_objective({int(C[i, m]): 1 for i in range(n) for m in range(nm)})
    else:
        d = inst.d_list
        D = np.empty((n, nm), dtype=np.int64)
        T = np.empty((n, nm), dtype=np.int64)
        for i in range(n):
            for m in range(nm):
                D[i, m] = model.add_var(name=f"D[{i},{m}]")
                T[i, m] = model.add_var(name=f"T[{i},{m}]")
                terms = {x[i, j, m]: -d[j] for j in range(n)}
                terms[D[i, m]] = 1
                add(terms, "==", 0)
                add({T[i, m]: 1, C[i, m]: -1, D[i, m]: 1}, ">=", 0)
        model.set_objective({int(T[i, m]): 1 for i in range(n) for m in range(nm)})

    data = [inst.p, inst.s] + ([inst.d] if objective == "sumT" else [])
    model.objective_integral = all(a.dtype.kind in "iu" for a in data)
    return MasterModel(model, n, nm, objective, with_y, valid_ineq, x, y, P, S, C, D, T)
