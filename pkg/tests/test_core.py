import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aspot import (BlockRule, ConvergenceTrace, DualPoint, PotInstance, SolverConfig,
                   TraceRecord, TransportPlan, plan_feasibility_gap, validate)
from aspot.exceptions import DimensionMismatch, InvalidInstanceError

from conftest import instances


def test_validate_accepts_slack_budget():
    inst = PotInstance([1.0], [1.0], [[0.0]], 0.5)
    assert validate(inst) is inst


def test_validate_rejects_budget_above_mass():
    with pytest.raises(InvalidInstanceError) as info:
        validate(PotInstance([1.0], [1.0], [[0.0]], 2.0))
    assert info.value.codes == ("BudgetExceedsMass",)


def test_validate_two_point_instance():
    inst = PotInstance([0.3, 0.2], [0.4, 0.1], [[1.0, 0.5], [0.2, 0.0]], 0.1)
    assert validate(inst) is inst


def test_validate_budget_at_mass_boundary_with_float_noise():
    r = np.full(3, 1 / 3)
    validate(PotInstance(r, r, np.ones((3, 3)), 1.0 + 5e-13))


@pytest.mark.parametrize("kwargs, code", [
    (dict(r=[-0.1, 0.5], c=[0.2, 0.2], C=np.ones((2, 2)), s=0.1), "NegativeEntry"),
    (dict(r=[0.1, 0.5], c=[0.2, 0.2, 0.1], C=np.ones((2, 2)), s=0.1), "DimensionMismatch"),
    (dict(r=[0.1, 0.5], c=[0.2, 0.2], C=np.ones((2, 3)), s=0.1), "DimensionMismatch"),
    (dict(r=[0.1, np.nan], c=[0.2, 0.2], C=np.ones((2, 2)), s=0.1), "NonFiniteEntry"),
    (dict(r=[0.1, 0.5], c=[0.2, 0.2], C=[[1, np.inf], [0, 0]], s=0.1), "NonFiniteEntry"),
])
def test_validate_reports_each_violation(kwargs, code):
    with pytest.raises(InvalidInstanceError) as info:
        validate(PotInstance(**kwargs))
    assert code in info.value.codes


def test_validate_lists_all_violations_together():
    with pytest.raises(InvalidInstanceError) as info:
        validate(PotInstance([-1.0, 0.5], [0.2, 0.2], np.ones((3, 3)), 5.0))
    assert {"NegativeEntry", "DimensionMismatch"} <= set(info.value.codes)


@given(instances())
def test_validate_is_idempotent(inst):
    assert validate(validate(inst)) is inst


def test_instance_is_immutable_copy():
    r = np.array([0.5, 0.5])
    inst = PotInstance(r, r, np.zeros((2, 2)), 0.5)
    r[0] = 9.0
    assert inst.r[0] == 0.5
    with pytest.raises(ValueError):
        inst.C[0, 0] = 1.0


def test_instance_json_round_trip(tmp_path):
    inst = PotInstance([0.3, 0.2], [0.4, 0.1], [[1.0, 0.5], [0.2, 0.0]], 0.1)
    doc = json.loads(inst.to_json())
    assert set(doc) == {"r", "c", "C", "s"}
    assert doc["C"] == [[1.0, 0.5], [0.2, 0.0]]  # row-major
    inst.save(tmp_path / "i.json")
    back = PotInstance.load(tmp_path / "i.json")
    np.testing.assert_array_equal(back.C, inst.C)
    assert back.s == inst.s


def test_instance_json_missing_key():
    with pytest.raises(ValueError, match="lacks keys"):
        PotInstance.from_json('{"r": [1], "c": [1], "C": [[0]]}')


def test_feasibility_gap_zero_for_feasible_plan():
    inst = PotInstance([1.0], [1.0], [[0.0]], 0.5)
    assert plan_feasibility_gap(np.array([[0.5]]), inst) == 0.0


def test_feasibility_gap_takes_largest_violation():
    inst = PotInstance([1.0], [1.0], [[0.0]], 0.5)
    assert plan_feasibility_gap(np.array([[1.2]]), inst) == pytest.approx(0.7)


def test_feasibility_gap_of_zero_plan_is_budget():
    inst = PotInstance([0.4, 0.6], [0.5, 0.5], np.ones((2, 2)), 0.3)
    assert plan_feasibility_gap(np.zeros((2, 2)), inst) == pytest.approx(0.3)


def test_feasibility_gap_dimension_mismatch():
    inst = PotInstance([1.0], [1.0], [[0.0]], 0.5)
    with pytest.raises(DimensionMismatch):
        plan_feasibility_gap(np.zeros((2, 2)), inst)


def test_transport_plan_slacks_are_consistent():
    inst = PotInstance([0.6, 0.4], [0.5, 0.5], np.ones((2, 2)), 0.5)
    X = np.array([[0.2, 0.1], [0.1, 0.1]])
    plan = TransportPlan.from_matrix(X, inst)
    np.testing.assert_allclose(plan.row_slack, inst.r - X.sum(axis=1))
    np.testing.assert_allclose(plan.col_slack, inst.c - X.sum(axis=0))
    assert plan.mass == pytest.approx(0.5)
    with pytest.raises(ValueError):
        TransportPlan.from_matrix(-X, inst)


def test_dual_point_rejects_non_finite():
    with pytest.raises(ValueError):
        DualPoint([0.0, np.inf], [0.0, 0.0], 0.0)
    with pytest.raises(DimensionMismatch):
        DualPoint([0.0], [0.0, 0.0], 0.0)


def test_dual_point_vector_round_trip():
    z = DualPoint([1.0, 2.0], [3.0, 4.0], 5.0)
    back = DualPoint.from_vector(z.to_vector())
    np.testing.assert_array_equal(back.to_vector(), [1, 2, 3, 4, 5])


@pytest.mark.parametrize("kwargs", [
    dict(epsilon=0.0), dict(max_iterations=0), dict(tuning_exponent_p=0.5),
    dict(gamma_override=-1.0), dict(log_every=0), dict(block_rule="sideways"),
])
def test_solver_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_solver_config_parses_block_rule():
    assert SolverConfig(block_rule="round-robin").block_rule is BlockRule.ROUND_ROBIN


def test_trace_requires_increasing_indices():
    trace = ConvergenceTrace()
    trace.append(TraceRecord(0, 1.0, 2.0, None, 0.0))
    with pytest.raises(ValueError):
        trace.append(TraceRecord(0, 1.0, 2.0, None, 0.0))


@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=10))
def test_trace_csv_round_trip(values):
    trace = ConvergenceTrace()
    for t, v in enumerate(values):
        trace.append(TraceRecord(t, v, -v, v if t % 2 else None, 0.001 * t))
    text = trace.to_csv()
    assert text.splitlines()[0] == "t,E,phi,rounded_cost,elapsed_s"
    back = ConvergenceTrace.from_csv(text)
    assert [r.E for r in back] == [r.E for r in trace]
    assert [r.rounded_cost for r in back] == [r.rounded_cost for r in trace]


def test_trace_csv_without_time_column():
    trace = ConvergenceTrace()
    trace.append(TraceRecord(0, 1.0, 2.0, None, 123.0))
    assert trace.to_csv(include_time=False) == "t,E,phi,rounded_cost\n0,1.0,2.0,\n"
