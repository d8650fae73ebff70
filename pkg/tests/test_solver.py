import math

import pytest

from upmsched.solver import (
    CapabilityError, LinearConstraint, ModelError, add_cuts, build_model, solve,
    solve_lp_relaxation,
)

BACKENDS = ["fallback", "highs"]


def one_binary():
    return build_model([("binary", 0, 1)], [], {0: 1})


def test_empty_model():
    assert build_model().num_vars == 0


def test_unknown_id_rejected():
    with pytest.raises(ModelError, match="unknown variable id 3"):
        build_model([("binary", 0, 1)], [({3: 1}, ">=", 1)])


def test_inconsistent_bounds_rejected():
    with pytest.raises(ModelError, match="inconsistent bounds"):
        build_model([("continuous", 2, 1)])


@pytest.mark.parametrize("backend", BACKENDS)
def test_min_binary(backend):
    out = solve(one_binary(), backend)
    assert out.status == "optimal" and out.objective == 0 and out.values[0] == 0


@pytest.mark.parametrize("backend", BACKENDS)
def test_cut_raises_optimum(backend):
    model = one_binary()
    add_cuts(model, [LinearConstraint({0: 1}, ">=", 1)])
    assert solve(model, backend).objective == 1
    add_cuts(model, [LinearConstraint({0: 1}, ">=", 1)])
    assert solve(model, backend).objective == 1
    add_cuts(model, [])
    assert model.num_constraints == 2


@pytest.mark.parametrize("backend", BACKENDS)
def test_infeasible(backend):
    model = build_model([("binary", 0, 1)], [({0: 1}, "<=", 0), ({0: 1}, ">=", 1)], {0: 1})
    assert solve(model, backend).status == "infeasible"


def knapsack():
    # max 5a + 4b + 3c s.t. 2a + 3b + c <= 4  ->  min of the negation
    return build_model([("binary", 0, 1)] * 3, [({0: 2, 1: 3, 2: 1}, "<=", 4)],
                       {0: -5, 1: -4, 2: -3})


@pytest.mark.parametrize("backend", BACKENDS)
def test_knapsack(backend):
    out = solve(knapsack(), backend)
    assert out.objective == pytest.approx(-8)
    assert out.dual_bound <= out.objective + 1e-9


def test_resolve_is_stable():
    model = knapsack()
    assert solve(model).objective == solve(model).objective


def test_lp_relaxation_below_integer_optimum():
    assert solve_lp_relaxation(knapsack()) <= -8


def test_hook_sees_only_integer_points_and_cuts_bind():
    model = knapsack()
    seen = []

    def hook(event):
        seen.append(tuple(event.values))
        assert all(abs(v - round(v)) < 1e-9 for v in event.values)
        if event.values[0] == 1 and event.values[2] == 1:
            return [LinearConstraint({0: 1, 2: 1}, "<=", 1)]
        return []

    out = solve(model, "fallback", incumbent_hook=hook)
    assert seen
    assert out.objective == pytest.approx(-7)  # b + c
    assert model.num_constraints == 2


def test_hook_cutoff_prunes():
    def hook(event):
        event.cutoff = -7.5
        return [LinearConstraint({0: 1, 1: 1, 2: 1}, "<=", 0)] if event.objective > -20 else []

    out = solve(knapsack(), "fallback", incumbent_hook=hook)
    assert out.status == "infeasible"
    assert out.dual_bound == pytest.approx(-7.5)


def test_highs_refuses_hooks():
    with pytest.raises(CapabilityError):
        solve(one_binary(), "highs", incumbent_hook=lambda e: [])


def test_unknown_backend():
    with pytest.raises(ValueError, match="unknown solver backend"):
        solve(one_binary(), "cplex")


@pytest.mark.parametrize("backend", BACKENDS)
def test_zero_time_limit(backend):
    out = solve(knapsack(), backend, time_limit=0)
    assert out.status == "limit"


def test_cutoff_makes_model_infeasible():
    out = solve(knapsack(), "fallback", cutoff=-8)
    assert out.status == "infeasible" and out.dual_bound == -8
    assert not math.isfinite(out.objective)
