import numpy as np
import pytest

from upmsched.encoding import Assignment, EncodingError, assignment_to_slots, resource_free_value
from upmsched.instance import Instance
from upmsched.master import (
    build_master, evaluate_form, local_branching_cut, nogood_cut,
)
from upmsched.neighbourhood import assignment_distance
from upmsched.oracle import all_assignments, count_assignments
from upmsched.solver import solve, solve_lp_relaxation
from support import T1_REF, small_instance, t1


def fix_assignment(master, inst, asg):
    sol = assignment_to_slots(inst, asg)
    model = master.model
    for idx in np.ndindex(sol.x.shape):
        v = int(master.x[idx])
        model.lb[v] = model.ub[v] = float(sol.x[idx])
    return model


def test_variable_counts():
    m = build_master(t1(), with_y=True)
    kinds = m.model.kind
    assert sum(k == "binary" for k in kinds) == 40
    assert m.x.shape == (4, 4, 2) and m.y.shape == (4, 2)
    assert build_master(t1()).y is None


def test_tardiness_master_needs_due_dates():
    inst = t1()
    bare = Instance(4, 2, 1, inst.p, inst.s)
    with pytest.raises(ValueError, match="due dates"):
        build_master(bare, "sumT")


@pytest.mark.parametrize("backend", ["fallback", "highs"])
def test_t1_master_optimum_is_resource_free(backend):
    out = solve(build_master(t1(), valid_ineq=False).model, backend)
    assert out.objective == pytest.approx(18)


@pytest.mark.parametrize("objective", ["sumC", "sumT"])
def test_master_optimum_matches_resource_free_oracle(objective):
    rng = np.random.default_rng(11)
    for _ in range(4):
        inst = small_instance(rng, 4, 2)
        best = min(resource_free_value(inst, a, objective) for a in all_assignments(4, 2))
        for vi in (False, True):
            out = solve(build_master(inst, objective, valid_ineq=vi).model, "highs")
            assert out.objective == pytest.approx(best)


def test_integer_points_are_exactly_the_assignments():
    rng = np.random.default_rng(2)
    inst = small_instance(rng, 3, 2)
    master = build_master(inst, with_y=True)
    found = set()
    while True:
        out = solve(master.model, "highs")
        if out.status == "infeasible":
            break
        sol, asg = master.extract_solution(out.values)
        assert asg.sequences not in found
        found.add(asg.sequences)
        master.add_cut(nogood_cut(sol))
    assert len(found) == count_assignments(3, 2)


@pytest.mark.parametrize("objective", ["sumC", "sumT"])
def test_fixed_assignment_reproduces_resource_free_value(objective):
    inst = t1()
    for asg in list(all_assignments(4, 2))[::9]:
        master = build_master(inst, objective, valid_ineq=True)
        lp = solve_lp_relaxation(fix_assignment(master, inst, asg))
        assert lp == pytest.approx(resource_free_value(inst, asg, objective))


def test_valid_inequality_never_weakens_lp():
    rng = np.random.default_rng(5)
    for _ in range(5):
        inst = small_instance(rng, 5, 2, s_max=6)
        lo = solve_lp_relaxation(build_master(inst, valid_ineq=False).model)
        hi = solve_lp_relaxation(build_master(inst, valid_ineq=True).model)
        assert hi >= lo - 1e-7


def test_nogood_cuts_only_its_reference():
    inst = t1()
    cut = nogood_cut(assignment_to_slots(inst, T1_REF))
    assert len(cut.support) == 4 and cut.rhs == 1
    for asg in all_assignments(4, 2):
        sol = assignment_to_slots(inst, asg)
        assert cut.is_satisfied(sol) == (asg != T1_REF)
    swap = assignment_to_slots(inst, Assignment([[1, 0], [2, 3]]))
    assert cut.lhs(swap) == 2


def test_local_branching_cut_removes_the_4_ball():
    inst = t1()
    cut = local_branching_cut(assignment_to_slots(inst, T1_REF))
    assert cut.rhs == 3 and len(cut.support) == 8
    for asg in all_assignments(4, 2):
        sol = assignment_to_slots(inst, asg)
        d = assignment_distance(T1_REF, asg)
        assert cut.lhs(sol) == d // 2
        assert cut.is_satisfied(sol) == (d > 4)


def test_local_branching_keeps_double_machine_change():
    sol = assignment_to_slots(t1(), Assignment([[0, 3], [2, 1]]))
    cut = local_branching_cut(assignment_to_slots(t1(), T1_REF))
    assert cut.lhs(sol) >= 4


def test_local_branching_needs_even_k():
    with pytest.raises(ValueError):
        local_branching_cut(assignment_to_slots(t1(), T1_REF), 5)


def test_projected_cut_is_equivalent():
    inst = t1()
    cut = local_branching_cut(assignment_to_slots(inst, T1_REF))
    full, proj = cut.linear_form(), cut.projected_form(inst.n_jobs)
    assert all(k[0] == "x" for k in proj[0])
    for asg in all_assignments(4, 2):
        sol = assignment_to_slots(inst, asg)
        assert evaluate_form(full, sol) == evaluate_form(proj, sol)


def test_local_branching_cut_without_y_in_master():
    inst = t1()
    master = build_master(inst)
    cut = local_branching_cut(assignment_to_slots(inst, T1_REF))
    lc = master.linearize(cut)
    assert all(v in set(master.x.ravel().tolist()) for v in lc.terms)


def test_extract_rounds_near_integers():
    inst = t1()
    master = build_master(inst, with_y=True)
    sol = assignment_to_slots(inst, T1_REF)
    values = np.zeros(master.model.num_vars)
    values[master.x.ravel()] = sol.x.ravel() * 0.9999
    values[master.y.ravel()] = sol.y.ravel()
    assert master.extract_solution(values)[1] == T1_REF


def test_extract_rejects_fractional_point():
    inst = t1()
    master = build_master(inst)
    sol = assignment_to_slots(inst, T1_REF)
    values = np.zeros(master.model.num_vars)
    values[master.x.ravel()] = sol.x.ravel()
    values[master.x[3, 1, 0]] = 0.5
    values[master.x[3, 1, 1]] = 0.5
    with pytest.raises(EncodingError):
        master.extract_solution(values)
