"""Thin mixed-integer linear programming layer.

A :class:`Model` is a backend-neutral container (variables, linear rows,
linear objective, minimisation).  Two backends solve it:

``highs``
    ``scipy.optimize.milp`` (HiGHS).  Fast, but offers no callback, so it
    can only be used by the iterative decomposition loop.
``fallback``
    A small LP-based branch-and-bound written here on top of
    ``scipy.optimize.linprog``.  It calls an incumbent hook on every new
    integer point and lets the hook inject lazy constraints into the running
    search, which is what Branch-and-Check needs.  Meant for small models.

The backend is chosen by name (configuration key ``solver.backend``).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint as _ScipyLC, linprog, milp

SENSES = ("<=", "==", ">=")
KINDS = ("binary", "integer", "continuous")
INT_TOL = 1e-6


class ModelError(ValueError):
    pass


class CapabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class LinearConstraint:
    terms: Mapping[int, float]
    sense: str
    rhs: float

    def activity(self, values) -> float:
        return sum(c * values[v] for v, c in self.terms.items())

    def is_satisfied(self, values, tol: float = 1e-6) -> bool:
        a = self.activity(values)
        if self.sense == "<=":
            return a <= self.rhs + tol
        if self.sense == ">=":
            return a >= self.rhs - tol
        return abs(a - self.rhs) <= tol


@dataclass
class Capabilities:
    supports_lazy_cuts: bool


@dataclass
class SolveOutcome:
    status: str                      # optimal | feasible | infeasible | limit
    values: np.ndarray | None = None
    objective: float = math.inf
    dual_bound: float = -math.inf
    wall_time: float = 0.0
    nodes: int = 0

    @property
    def has_incumbent(self) -> bool:
        return self.values is not None


class Model:
    """Minimisation MILP built incrementally; variable ids are dense ints."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.kind: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.var_names: list[str | None] = []
        self.constraints: list[LinearConstraint] = []
        self.objective: dict[int, float] = {}
        self.objective_constant = 0.0
        # Every integer point has an integral objective value; lets the
        # branch-and-bound round node bounds up.
        self.objective_integral = False

    @property
    def num_vars(self) -> int:
        return len(self.kind)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def add_var(self, kind: str = "continuous", lb: float = 0.0,
                ub: float = math.inf, name: str | None = None) -> int:
        if kind not in KINDS:
            raise ModelError(f"unknown variable kind {kind!r}")
        if kind == "binary":
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub:
            raise ModelError(f"inconsistent bounds for {name or len(self.kind)}: {lb} > {ub}")
        self.kind.append(kind)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.var_names.append(name)
        return len(self.kind) - 1

    def _check_terms(self, terms) -> dict[int, float]:
        out: dict[int, float] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for v, c in items:
            v = int(v)
            if not 0 <= v < self.num_vars:
                raise ModelError(f"unknown variable id {v}")
            if c:
                out[v] = out.get(v, 0.0) + float(c)
        return out

    def add_constraint(self, terms, sense: str, rhs: float) -> int:
        if sense not in SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        self.constraints.append(LinearConstraint(self._check_terms(terms), sense, float(rhs)))
        return len(self.constraints) - 1

    def set_objective(self, terms, constant: float = 0.0) -> None:
        self.objective = self._check_terms(terms)
        self.objective_constant = float(constant)

    def stats(self) -> dict[str, int]:
        return {
            "rows": self.num_constraints,
            "cols": self.num_vars,
            "nonzeros": sum(len(c.terms) for c in self.constraints),
        }

    def objective_value(self, values) -> float:
        return self.objective_constant + sum(c * values[v] for v, c in self.objective.items())

    def arrays(self, start: int = 0):
        """Matrix form of rows ``start:``: ``(A, row_lo, row_hi)``."""
        rows, cols, data = [], [], []
        lo, hi = [], []
        for r, con in enumerate(self.constraints[start:]):
            for v, c in con.terms.items():
                rows.append(r)
                cols.append(v)
                data.append(c)
            lo.append(con.rhs if con.sense in (">=", "==") else -math.inf)
            hi.append(con.rhs if con.sense in ("<=", "==") else math.inf)
        A = sp.csr_array((data, (rows, cols)), shape=(len(lo), self.num_vars))
        return A, np.array(lo, dtype=float), np.array(hi, dtype=float)

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for v, coef in self.objective.items():
            c[v] = coef
        return c

    def integer_mask(self) -> np.ndarray:
        return np.array([k != "continuous" for k in self.kind], dtype=bool)


def build_model(variables: Iterable = (), constraints: Iterable = (),
                objective: Mapping[int, float] | None = None, name: str = "model") -> Model:
    """Build a :class:`Model` from plain descriptions.

    ``variables`` holds ``(kind, lb, ub)`` tuples, ``constraints`` holds
    ``(terms, sense, rhs)`` tuples with ``terms`` a ``{var_id: coef}`` map.
    """
    model = Model(name)
    for kind, lb, ub in variables:
        model.add_var(kind, lb, ub)
    for terms, sense, rhs in constraints:
        model.add_constraint(terms, sense, rhs)
    if objective is not None:
        model.set_objective(objective)
    return model


def add_cuts(model: Model, cuts: Iterable[LinearConstraint]) -> None:
    for cut in cuts:
        model.add_constraint(cut.terms, cut.sense, cut.rhs)


class IncumbentEvent:
    """Passed to an incumbent hook for every new integer point.

    The hook may lower :attr:`cutoff`; the search then ignores every node
    that cannot reach an objective strictly below it.
    """

    def __init__(self, values: np.ndarray, objective: float, dual_bound: float,
                 cutoff: float):
        self.values = values
        self.objective = objective
        self.dual_bound = dual_bound
        self.cutoff = cutoff


IncumbentHook = Callable[[IncumbentEvent], Iterable[LinearConstraint] | None]


# -- LP relaxation ---------------------------------------------------------

def _lp_form(A, lo, hi):
    """Split row bounds into the ``A_ub x <= b_ub`` / ``A_eq x = b_eq`` form."""
    A_ub_parts, b_ub_parts = [], []
    eq = lo == hi
    fin_hi = np.isfinite(hi) & ~eq
    fin_lo = np.isfinite(lo) & ~eq
    if fin_hi.any():
        A_ub_parts.append(A[fin_hi])
        b_ub_parts.append(hi[fin_hi])
    if fin_lo.any():
        A_ub_parts.append(-A[fin_lo])
        b_ub_parts.append(-lo[fin_lo])
    A_ub = sp.vstack(A_ub_parts, format="csr") if A_ub_parts else None
    b_ub = np.concatenate(b_ub_parts) if b_ub_parts else None
    A_eq = A[eq] if eq.any() else None
    b_eq = lo[eq] if eq.any() else None
    return A_ub, b_ub, A_eq, b_eq


def _lp(c, form, lb, ub):
    A_ub, b_ub, A_eq, b_eq = form
    return linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                   bounds=np.column_stack([lb, ub]), method="highs")


def solve_lp_relaxation(model: Model) -> float:
    """Optimal value of the continuous relaxation (``inf`` if infeasible)."""
    form = _lp_form(*model.arrays())
    res = _lp(model.cost_vector(), form, np.array(model.lb), np.array(model.ub))
    if res.status == 2:
        return math.inf
    if res.status != 0:
        raise RuntimeError(f"LP relaxation failed: {res.message}")
    return float(res.fun) + model.objective_constant


# -- backends --------------------------------------------------------------

class HighsBackend:
    name = "highs"
    capabilities = Capabilities(supports_lazy_cuts=False)

    def solve(self, model: Model, time_limit: float | None = None, gap: float | None = None,
              incumbent_hook: IncumbentHook | None = None,
              cutoff: float = math.inf) -> SolveOutcome:
        if incumbent_hook is not None:
            raise CapabilityError("the highs backend cannot run incumbent hooks")
        start = time.perf_counter()
        if time_limit is not None and time_limit <= 0:
            return SolveOutcome("limit", wall_time=0.0)
        n = model.num_vars
        c = model.cost_vector()
        cons = []
        if model.num_constraints:
            A, lo, hi = model.arrays()
            cons.append(_ScipyLC(A, lo, hi))
        if math.isfinite(cutoff):
            cons.append(_ScipyLC(c.reshape(1, -1), -np.inf, cutoff - model.objective_constant))
        options = {"disp": False}
        if time_limit is not None:
            options["time_limit"] = float(time_limit)
        options["mip_rel_gap"] = 0.0 if gap is None else float(gap)
        res = milp(c, constraints=cons, integrality=model.integer_mask().astype(int),
                   bounds=Bounds(np.array(model.lb), np.array(model.ub)), options=options)
        wall = time.perf_counter() - start
        dual = getattr(res, "mip_dual_bound", None)
        dual = -math.inf if dual is None or not np.isfinite(dual) else float(dual) + model.objective_constant
        if res.status == 0:
            obj = float(res.fun) + model.objective_constant
            bound = min(dual, obj) if math.isfinite(dual) else obj
            return SolveOutcome("optimal", np.asarray(res.x), obj, bound, wall)
        if res.status == 2:
            return SolveOutcome("infeasible", wall_time=wall,
                                dual_bound=cutoff if math.isfinite(cutoff) else math.inf)
        if res.status == 1:
            if res.x is not None:
                return SolveOutcome("limit", np.asarray(res.x),
                                    float(res.fun) + model.objective_constant, dual, wall)
            return SolveOutcome("limit", dual_bound=dual, wall_time=wall)
        raise RuntimeError(f"HiGHS failed: {res.message}")


class BranchAndBoundBackend:
    """Depth-first LP-based branch-and-bound with lazy-constraint hooks."""

    name = "fallback"
    capabilities = Capabilities(supports_lazy_cuts=True)

    def solve(self, model: Model, time_limit: float | None = None, gap: float | None = None,
              incumbent_hook: IncumbentHook | None = None,
              cutoff: float = math.inf) -> SolveOutcome:
        start = time.perf_counter()
        deadline = math.inf if time_limit is None else start + time_limit
        gap = 0.0 if gap is None else gap
        c = model.cost_vector()
        const = model.objective_constant
        int_mask = model.integer_mask()
        int_idx = np.nonzero(int_mask)[0]
        form = _lp_form(*model.arrays())
        n_rows = model.num_constraints

        best_x, best_obj = None, math.inf
        cutoff = float(cutoff)
        integral = model.objective_integral

        def hopeless(bound: float) -> bool:
            limit = min(best_obj, cutoff)
            if not math.isfinite(limit) or not math.isfinite(bound):
                return bound == math.inf
            if integral:
                return math.ceil(bound - 1e-6) >= limit - 1e-9
            return bound >= limit - 1e-9 * max(1.0, abs(limit))

        root = (-math.inf, np.array(model.lb), np.array(model.ub))
        stack = [root]
        nodes = 0
        timed_out = False
        while stack:
            if time.perf_counter() >= deadline:
                timed_out = True
                break
            parent_bound, lb, ub = stack.pop()
            if hopeless(parent_bound):
                continue
            if gap > 0 and best_x is not None:
                dual = min([parent_bound] + [nd[0] for nd in stack])
                if best_obj - dual <= gap * max(abs(best_obj), 1e-9):
                    stack.clear()
                    break
            if model.num_constraints != n_rows:
                form = _lp_form(*model.arrays())
                n_rows = model.num_constraints
            nodes += 1
            res = _lp(c, form, lb, ub)
            if res.status == 2:
                continue
            if res.status != 0:
                raise RuntimeError(f"node LP failed: {res.message}")
            bound = float(res.fun) + const
            if hopeless(bound):
                continue
            x = res.x
            frac = np.abs(x[int_idx] - np.round(x[int_idx]))
            if frac.size == 0 or frac.max() <= INT_TOL:
                x = x.copy()
                x[int_idx] = np.round(x[int_idx])
                obj = model.objective_value(x)
                if incumbent_hook is not None:
                    dual = min([bound] + [nd[0] for nd in stack] + [best_obj])
                    event = IncumbentEvent(x, obj, dual, cutoff)
                    cuts = list(incumbent_hook(event) or [])
                    cutoff = min(cutoff, event.cutoff)
                    if cuts:
                        add_cuts(model, cuts)
                        if any(not cut.is_satisfied(x) for cut in cuts):
                            stack.append((bound, lb, ub))
                            continue
                if obj < best_obj:
                    best_x, best_obj = x, obj
                continue
            # branch on the most fractional integer variable, nearer side first
            k = int(int_idx[np.argmax(frac)])
            val = x[k]
            down_ub = ub.copy()
            down_ub[k] = math.floor(val)
            up_lb = lb.copy()
            up_lb[k] = math.ceil(val)
            down = (bound, lb, down_ub)
            up = (bound, up_lb, ub)
            if val - math.floor(val) >= 0.5:
                stack.extend([down, up])
            else:
                stack.extend([up, down])

        wall = time.perf_counter() - start
        if timed_out:
            dual = min([nd[0] for nd in stack] + [best_obj])
            status = "limit"
        else:
            dual = min(best_obj, cutoff)
            status = "optimal" if best_x is not None else "infeasible"
        return SolveOutcome(status, best_x, best_obj, dual, wall, nodes)


BACKENDS = {
    "highs": HighsBackend,
    "fallback": BranchAndBoundBackend,
}


def get_backend(name: str):
    try:
        return BACKENDS[name]()
    except KeyError:
        raise ValueError(f"unknown solver backend {name!r}; choose from {sorted(BACKENDS)}") from None


def solve(model: Model, backend: str = "fallback", time_limit: float | None = None,
          gap: float | None = None, incumbent_hook: IncumbentHook | None = None,
          cutoff: float = math.inf) -> SolveOutcome:
    if not model.objective and model.objective_constant == 0 and model.num_vars == 0:
        return SolveOutcome("optimal", np.zeros(0), 0.0, 0.0)
    engine = get_backend(backend)
    if incumbent_hook is not None and not engine.capabilities.supports_lazy_cuts:
        raise CapabilityError(f"backend {backend!r} does not support lazy cuts")
    return engine.solve(model, time_limit=time_limit, gap=gap,
                        incumbent_hook=incumbent_hook, cutoff=cutoff)
