# Standard Library Imports
from dataclasses import replace

# Third-Party Library Imports
import numpy as np
import pytest

# Local Application Imports
from src.common import AlgorithmSettings
from src.common.constants import CONSTANT_TERM
from src.core import (
    AlgorithmError,
    ApproximatePoint,
    BoundOnly,
    GlobalSolution,
    InfeasibleRelaxation,
    MismatchReport,
    RankConditionError,
    RelaxationState,
    approx_solution,
    check_rank1,
    extract,
    increment_orders,
    mismatch,
    rank_one_approximation,
    run_algorithm1,
    solve_local,
    solve_relaxation,
    verify_feasibility,
)
from src.relaxation import assemble_complex, assemble_real, sparsity_structure

from .conftest import random_voltages

ASSEMBLERS = {"real": assemble_real, "complex": assemble_complex}


def report(values) -> MismatchReport:
    values = np.asarray(values, dtype=float)
    return MismatchReport(values, np.ones(len(values), dtype=complex), (1.0,), (0.0,))


def lifted(case, hierarchy, rng, orders=None):
    relaxation = ASSEMBLERS[hierarchy](case, sparsity_structure(case), orders or [1] * case.n)
    v = random_voltages(case, rng)
    return relaxation, v, relaxation.lift_point(v)


def test_increment_falls_back_to_raising_gamma_max():
    state = RelaxationState.initial(3)
    escalated = increment_orders(state, report([5.0, 0.2, 3.0]), h=2, eps_mva=1.0)
    assert escalated.orders == (2, 1, 2)
    assert escalated.gamma_max == 2
    assert escalated.changed == (0, 2)


def test_increment_prefers_buses_below_gamma_max():
    state = RelaxationState(orders=(2, 1, 1), gamma_max=2)
    escalated = increment_orders(state, report([0.5, 3.0, 2.0]), h=1, eps_mva=1.0)
    assert escalated.orders == (2, 2, 1)
    assert escalated.gamma_max == 2


def test_increment_breaks_ties_by_bus_index():
    state = RelaxationState(orders=(1, 1, 1, 1), gamma_max=2)
    escalated = increment_orders(state, report([2.0, 4.0, 4.0, 4.0]), h=2, eps_mva=1.0)
    assert escalated.changed == (1, 2)


def test_increment_is_a_no_op_within_tolerance():
    state = RelaxationState(orders=(2, 1), gamma_max=2)
    escalated = increment_orders(state, report([0.9, 1.0]), h=4, eps_mva=1.0)
    assert escalated.orders == state.orders
    assert escalated.gamma_max == 2
    assert escalated.changed == ()


def test_increment_rejects_bad_arguments():
    state = RelaxationState.initial(2)
    with pytest.raises(ValueError):
        increment_orders(state, report([2.0, 2.0]), h=0, eps_mva=1.0)
    with pytest.raises(ValueError):
        increment_orders(state, report([2.0, 2.0]), h=1, eps_mva=0.0)
    with pytest.raises(ValueError):
        increment_orders(state, report([2.0]), h=1, eps_mva=1.0)


def test_state_validation():
    with pytest.raises(ValueError):
        RelaxationState(orders=(0, 1))
    with pytest.raises(ValueError):
        RelaxationState(orders=(2, 1), gamma_max=1)
    state = RelaxationState.initial(3)
    assert state.orders == (1, 1, 1) and state.iteration == 0


def test_check_rank1_examples(rng):
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    ok, ratio = check_rank1(np.outer(v, v.conj()))
    assert ok and ratio < 1e-12
    ok, ratio = check_rank1(np.eye(2))
    assert not ok and ratio == pytest.approx(1.0)
    w = np.array([1.0, -1.0]) / np.sqrt(2)
    u = np.array([1.0, 1.0]) / np.sqrt(2)
    ok, ratio = check_rank1(0.999999 * np.outer(u, u) + 1e-6 * np.outer(w, w))
    assert ok and ratio == pytest.approx(1e-6 / 0.999999, rel=1e-6)


def test_rank_one_approximation_examples(rng):
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    vector, lambda_1, ratio = rank_one_approximation(np.outer(v, v.conj()))
    phase = np.vdot(vector, v) / abs(np.vdot(vector, v))
    assert np.linalg.norm(vector * phase - v) < 1e-8
    assert lambda_1 == pytest.approx(np.vdot(v, v).real)
    assert ratio < 1e-12
    assert abs(vector[np.argmax(np.abs(vector))].imag) < 1e-14

    vector, lambda_1, ratio = rank_one_approximation(np.eye(2))
    assert lambda_1 == pytest.approx(1.0)
    assert np.linalg.norm(vector) == pytest.approx(1.0)
    assert ratio == pytest.approx(1.0)

    q, _ = np.linalg.qr(rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2)))
    first, second = q[:, 0], q[:, 1]
    mixed = 0.9 * np.outer(first, first.conj()) + 0.1 * np.outer(second, second.conj())
    vector, lambda_1, ratio = rank_one_approximation(mixed)
    assert lambda_1 == pytest.approx(0.9)
    assert ratio == pytest.approx(0.1 / 0.9)
    assert abs(np.vdot(first, vector)) == pytest.approx(np.sqrt(0.9))


def test_rank_one_approximation_needs_positive_eigenvalue():
    with pytest.raises(AlgorithmError):
        rank_one_approximation(-np.eye(2))


@pytest.mark.parametrize("hierarchy", ["real", "complex"])
def test_extract_recovers_lifted_voltages(case14, rng, hierarchy):
    relaxation, v, y = lifted(case14, hierarchy, rng)
    assert len(relaxation.structure.cliques) > 1
    np.testing.assert_allclose(extract(relaxation, y), v, atol=1e-7)


def test_extract_aligns_rotated_complex_moments(case9, rng):
    relaxation, v, _ = lifted(case9, "complex", rng)
    y = relaxation.lift_point(v * np.exp(0.7j))
    np.testing.assert_allclose(extract(relaxation, y), v, atol=1e-7)


def test_extract_rejects_mixed_moments(case9, rng):
    relaxation, _, first = lifted(case9, "real", rng)
    second = relaxation.lift_point(random_voltages(case9, rng, spread=0.6))
    with pytest.raises(RankConditionError) as info:
        extract(relaxation, 0.5 * (first + second))
    assert info.value.ratio >= 1e-5


@pytest.mark.parametrize("hierarchy", ["real", "complex"])
def test_mismatch_vanishes_at_lifted_points(case9, rng, hierarchy):
    relaxation, v, y = lifted(case9, hierarchy, rng)
    result = mismatch(case9, relaxation, y)
    assert result.max_mismatch < 1e-6
    assert np.all(result.mismatch_mva >= 0)
    np.testing.assert_allclose(result.voltages, v, atol=1e-7)


def test_mismatch_reports_perturbed_injection(case9, rng):
    relaxation, _, y = lifted(case9, "complex", rng)
    p_form, q_form = relaxation.injection_forms[4]
    relaxation.injection_forms[4] = ({**p_form, CONSTANT_TERM: p_form.get(CONSTANT_TERM, 0.0) + 0.01}, q_form)
    result = mismatch(case9, relaxation, y)
    assert result.worst_bus == 4
    assert result.mismatch_mva[4] == pytest.approx(1.0, abs=1e-9)


def test_mismatch_is_phase_invariant(case9, rng):
    relaxation, _, y = lifted(case9, "complex", rng)
    point = approx_solution(relaxation, y)
    rotated = ApproximatePoint(point.voltages * np.exp(1.3j), point.lambda_1, point.eig_ratios)
    base = mismatch(case9, relaxation, y, point)
    turned = mismatch(case9, relaxation, y, rotated)
    np.testing.assert_allclose(base.mismatch_mva, turned.mismatch_mva, atol=1e-10)


def test_verify_feasibility_reports_forced_violations(case9, rng):
    v = random_voltages(case9, rng)
    report_ = verify_feasibility(case9, 2.0 * v)
    assert report_.max_violation("pu") > 0.5
    assert report_.worst() is not None

    delta = 0.05
    turned = v.copy()
    turned[case9.ref_bus] *= np.exp(1j * delta)
    angle = next(item for item in verify_feasibility(case9, turned).violations if item.name == "reference_angle")
    assert angle.value == pytest.approx(delta)
    assert angle.unit == "rad"


def test_verify_feasibility_checks_shape(case9):
    with pytest.raises(ValueError):
        verify_feasibility(case9, np.ones(3))


def test_feasibility_report_units(case2):
    report_ = verify_feasibility(case2, np.array([1.0, 1.0 + 0j]))
    summary = report_.summary()
    assert set(summary) == {"MW", "MVAr", "pu", "MVA", "rad"}
    assert summary["MVA"] == float("-inf")
    assert summary["pu"] <= 0
    assert not report_.is_feasible(1.0)


@pytest.mark.slow
def test_exact_first_order_case_stops_after_one_iteration(case2):
    result = run_algorithm1(case2, "complex")
    assert isinstance(result, GlobalSolution)
    assert result.state.iteration == 1
    assert result.state.orders == (1, 1)
    assert result.gap < 1e-5
    assert result.feasibility.is_feasible(1.0)
    assert abs(np.angle(result.voltages[case2.ref_bus])) < 1e-12


@pytest.mark.slow
def test_inexact_case_needs_second_order(wb2):
    result = run_algorithm1(wb2, "real")
    assert isinstance(result, GlobalSolution)
    assert max(result.state.orders) == 2
    assert result.gap < 1e-5
    assert result.objective == pytest.approx(905.73, rel=1e-3)
    assert result.feasibility.is_feasible(2.0)
    log = result.state.log
    for before, after in zip(log, log[1:]):
        assert after["objective"] >= before["objective"] - 1e-7 * (1 + abs(before["objective"]))
        assert all(b <= a for b, a in zip(before["orders"], after["orders"]))


@pytest.mark.slow
def test_iteration_cap_returns_bound(wb2):
    result = run_algorithm1(wb2, "real", AlgorithmSettings(max_iterations=1))
    assert isinstance(result, BoundOnly)
    assert result.reason == "max_iterations"
    assert result.mismatch is not None and result.mismatch.max_mismatch > 1.0


@pytest.mark.slow
def test_order_cap_returns_bound(wb2):
    result = run_algorithm1(wb2, "complex", AlgorithmSettings(max_gamma=1))
    assert isinstance(result, BoundOnly)
    assert result.reason == "max_gamma"
    assert result.state.orders == (1, 1)


@pytest.mark.slow
def test_infeasible_relaxation_is_reported(case2):
    starved = replace(case2, gens=tuple(replace(gen, p_max=0.1) for gen in case2.gens))
    with pytest.raises(InfeasibleRelaxation) as info:
        run_algorithm1(starved, "complex")
    assert info.value.iteration == 1


def test_algorithm_rejects_bad_h(case2):
    with pytest.raises(ValueError):
        run_algorithm1(case2, "real", h=0)


def test_local_solver_needs_a_start(case2):
    with pytest.raises(ValueError):
        solve_local(case2, starts=0)


@pytest.mark.slow
def test_local_solution_is_feasible_and_above_bound(case2):
    local = solve_local(case2, starts=3)
    assert local is not None
    assert local.feasibility.is_feasible(1.0)
    result = run_algorithm1(case2, "complex")
    assert local.objective >= result.bound - 1e-6 * max(1.0, abs(local.objective))


def test_solve_relaxation_rejects_unknown_hierarchy(case2):
    with pytest.raises(ValueError):
        solve_relaxation(case2, "quaternion", [1, 1])  # type: ignore[arg-type]


@pytest.mark.slow
def test_solve_relaxation_returns_consistent_parts(case2, solver_settings):
    result = solve_relaxation(case2, "complex", [1, 1], settings=solver_settings)
    assert result.solution.is_optimal
    assert result.problem.num_vars == result.relaxation.num_vars
    assert result.solution.objective == pytest.approx(result.problem.objective(result.solution.y))


@pytest.mark.slow
def test_extract_from_solved_first_order_relaxation(case2):
    result = solve_relaxation(case2, "complex", [1, 1])
    assert result.solution.status == "optimal"
    y = result.solution.y
    relaxation = result.relaxation
    for first in relaxation.first_order:
        block = relaxation.blocks[first.block_index].evaluate(y)
        rows = list(first.rows)
        assert check_rank1(block[np.ix_(rows, rows)])[0]
    assert mismatch(case2, relaxation, y).max_mismatch <= 1.0
    voltages = extract(relaxation, y)
    assert np.all(np.abs(voltages) >= case2.v_min - 1e-6)
    assert np.all(np.abs(voltages) <= case2.v_max + 1e-6)
    assert verify_feasibility(case2, voltages).is_feasible(1.0)
