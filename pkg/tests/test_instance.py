import json
from fractions import Fraction

import numpy as np
import pytest

from upmsched.instance import (
    GenParams, Instance, InstanceFormatError, due_date_window, dumps_instance,
    estimated_makespan, generate_instance, instance_from_dict, instance_to_dict,
    loads_instance, min_successor_setup, processing_time, read_instance,
    validate_instance, write_instance,
)
from support import t1


def test_processing_time_formula():
    assert processing_time(3.0, 2.0, 4.0) == 10.0


def test_due_date_window():
    lo, hi = due_date_window(100, 0.8, 0.2)
    assert lo == pytest.approx(10)
    assert hi == pytest.approx(30)


def test_r_from_fraction():
    assert GenParams(50, 5, Fraction(2, 5)).R == 2
    assert GenParams(50, 5, Fraction(3, 5)).R == 3
    assert GenParams(4, 2, Fraction(2, 5)).R == 1


def test_name_format():
    assert GenParams(50, 5, alpha=0, tau=0.5).name == "J50_M5_τ0.5_α0"
    assert GenParams(50, 5, alpha=1, tau=0.8).name == "J50_M5_τ0.8_α1"


@pytest.mark.parametrize("kwargs", [
    {"alpha": 3}, {"tau": 0.6}, {"rho": 0.3}, {"R_fraction": Fraction(1, 2)},
])
def test_generator_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        generate_instance(GenParams(6, 2, **kwargs))


def test_generator_rejects_more_machines_than_jobs():
    with pytest.raises(ValueError, match="S1"):
        generate_instance(GenParams(2, 3))


def test_generator_is_deterministic():
    a = generate_instance(GenParams(8, 3, alpha=1, seed=5))
    b = generate_instance(GenParams(8, 3, alpha=1, seed=5))
    c = generate_instance(GenParams(8, 3, alpha=1, seed=6))
    assert dumps_instance(a) == dumps_instance(b)
    assert a == b
    assert a != c


def test_generated_values_are_integral_and_valid():
    inst = generate_instance(GenParams(10, 3, alpha=2, tau=0.8, seed=1))
    assert inst.p.dtype.kind == "i" and inst.s.dtype.kind == "i" and inst.d.dtype.kind == "i"
    assert validate_instance(inst) == []
    assert np.all(np.diagonal(inst.s, axis1=0, axis2=1) == 0)


def test_estimated_makespan_skips_starting_jobs():
    # two machines, three jobs: only one setup (the smallest kappa) counts
    p = np.array([[2, 9], [3, 9], [4, 9]])
    s = np.full((3, 3, 2), 10)
    s[0, 1, 0] = 1
    s[2, 0, 1] = 5
    for i in range(3):
        s[i, i] = 0
    # kappa = [5, 1, 10]; n - m = 1 -> S1 = 1
    assert estimated_makespan(p, s) == pytest.approx((2 + 3 + 4 + 1) / 2)


def test_validate_t1_is_clean():
    assert validate_instance(t1()) == []


def test_validate_flags_r_zero():
    out = validate_instance(t1().with_resources(0))
    assert len(out) == 1 and out[0].startswith("R")


def test_validate_flags_negative_processing_time():
    inst = t1()
    p = inst.p.copy()
    p[0, 0] = -1
    bad = Instance(4, 2, 1, p, inst.s, inst.d)
    out = validate_instance(bad)
    assert out == ["p[0][0]: must be finite and >= 0, got -1"]


def test_min_successor_setup():
    s = np.zeros((3, 3, 1))
    s[0, 1, 0] = 5
    s[0, 2, 0] = 3
    s[1, 0, 0] = s[1, 2, 0] = s[2, 0, 0] = s[2, 1, 0] = 7
    inst = Instance(3, 1, 1, np.ones((3, 1)), s)
    assert min_successor_setup(inst)[0, 0] == 3
    assert np.all(min_successor_setup(t1()) == 3)


def test_min_successor_setup_needs_two_jobs():
    with pytest.raises(ValueError):
        min_successor_setup(Instance(1, 1, 1, [[5]], np.zeros((1, 1, 1))))


def test_min_successor_setup_is_a_lower_bound():
    inst = generate_instance(GenParams(7, 2, alpha=1, seed=3))
    lo = min_successor_setup(inst)
    for j in range(7):
        for m in range(2):
            assert all(lo[j, m] <= inst.s[j, l, m] for l in range(7) if l != j)


def test_round_trip_file(tmp_path):
    inst = t1()
    path = tmp_path / "t1.json"
    write_instance(inst, path)
    assert read_instance(path) == inst


def test_missing_r_is_a_parse_error():
    doc = instance_to_dict(t1())
    del doc["R"]
    with pytest.raises(InstanceFormatError, match="'R'"):
        instance_from_dict(doc)


def test_sparse_setups_off_diagonal_only():
    inst = t1()
    doc = instance_to_dict(inst)
    doc["s"] = [[i, j, m, 3] for i in range(4) for j in range(4) if i != j for m in range(2)]
    assert instance_from_dict(doc) == inst


def test_sparse_setups_missing_entry():
    doc = instance_to_dict(t1())
    doc["s"] = [[0, 1, 0, 3]]
    with pytest.raises(InstanceFormatError, match="missing entry"):
        instance_from_dict(doc)


def test_bad_json():
    with pytest.raises(InstanceFormatError):
        loads_instance("{not json")


def test_serialization_is_canonical():
    text = dumps_instance(t1())
    assert text.endswith("\n")
    assert json.loads(text)["R"] == 1
    assert dumps_instance(loads_instance(text)) == text
