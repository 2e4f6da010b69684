# Third-Party Library Imports
import numpy as np
import pytest

# Local Application Imports
from src.core import solve_local
from src.network import objective_polynomial
from src.relaxation import (
    OrderTooLowError,
    RelaxationOptions,
    assemble_complex,
    assemble_real,
    dense_structure,
    hermitian_to_real,
    schur_cost_block,
    schur_flow_block,
    sparsity_structure,
)
from src.sdp import residuals, solve

from .conftest import random_voltages

ASSEMBLERS = {"real": assemble_real, "complex": assemble_complex}


def named_block(relaxation, name):
    return next(block for block in relaxation.blocks if block.name == name)


def relaxation_value(case, hierarchy, orders, options=None, structure=None):
    structure = structure or sparsity_structure(case, options)
    relaxation = ASSEMBLERS[hierarchy](case, structure, orders, options)
    solution = solve(relaxation.to_sdp_problem())
    assert solution.is_optimal, solution.status
    return solution.objective


def test_real_order_two_moment_pattern(case2):
    relaxation = assemble_real(case2, dense_structure(case2), [2, 2])
    (moment,) = relaxation.moment_blocks()
    assert moment.dim == 10
    rendered = moment.render(relaxation.idx)
    assert rendered[0] == ["y_000", "y_100", "y_010", "y_001", "y_200", "y_110", "y_101", "y_020", "y_011", "y_002"]
    assert rendered[1][1] == "y_200"
    assert rendered[3][3] == "y_002"
    assert rendered[4][9] == "y_202"
    assert rendered[1][4] == "y_300"
    assert rendered[9][9] == "y_004"


def test_real_order_two_localizing_pattern(case2):
    relaxation = assemble_real(case2, dense_structure(case2), [2, 2])
    block = named_block(relaxation, "V[bus 1]_min")
    assert block.dim == 4
    rendered = block.render(relaxation.idx)
    assert rendered[0][0] == "-0.81 y_000 + y_020 + y_002"
    assert rendered[1][2] == "-0.81 y_110 + y_130 + y_112"


def test_complex_order_two_patterns(case2):
    relaxation = assemble_complex(case2, dense_structure(case2), [2, 2])
    (moment,) = relaxation.moment_blocks()
    assert moment.dim == 6 and moment.hermitian
    rendered = moment.render(relaxation.idx)
    assert rendered[0][0] == "ŷ_{00,00}"
    assert rendered[1][2] == "ŷ_{10,01}"
    assert rendered[2][1] == "ŷ_{01,10}"
    assert rendered[5][5] == "ŷ_{02,02}"
    localizing = named_block(relaxation, "V[bus 1]_min")
    assert localizing.dim == 3
    assert localizing.render(relaxation.idx)[0][0] == "-0.81 ŷ_{00,00} + ŷ_{01,01}"


def test_complex_blocks_double_at_export(case2):
    relaxation = assemble_complex(case2, dense_structure(case2), [2, 2])
    sizes = [block.dim for block in relaxation.to_sdp_problem().blocks]
    assert 12 in sizes
    assert relaxation.census().max_block_dim == 12


def test_first_order_has_no_localizing_blocks(bundled_cases):
    for case in bundled_cases:
        for assemble in ASSEMBLERS.values():
            relaxation = assemble(case, sparsity_structure(case), [1] * case.n)
            census = relaxation.census()
            assert "localizing" not in census.num_blocks
            assert census.num_blocks["moment"] == len(relaxation.structure.cliques)
            assert census.num_equalities >= 1


def test_direct_cost_needs_order_two(case2):
    with pytest.raises(OrderTooLowError):
        assemble_real(case2, dense_structure(case2), [1, 1], RelaxationOptions(cost_form="direct"))


def test_orders_out_of_range(case2):
    with pytest.raises(ValueError):
        assemble_complex(case2, dense_structure(case2), [4, 1])
    with pytest.raises(ValueError):
        assemble_complex(case2, dense_structure(case2), [1])


def test_invalid_options():
    with pytest.raises(ValueError):
        RelaxationOptions(objective="profit")
    with pytest.raises(ValueError):
        RelaxationOptions(cost_form="quartic")


@pytest.mark.parametrize("hierarchy", ["real", "complex"])
@pytest.mark.parametrize("mode", ["cost", "loss"])
def test_lifted_objective_matches_polynomial(case9, rng, hierarchy, mode):
    options = RelaxationOptions(objective=mode)
    relaxation = ASSEMBLERS[hierarchy](case9, sparsity_structure(case9, options), [1] * case9.n, options)
    v = random_voltages(case9, rng)
    problem = relaxation.to_sdp_problem()
    expected = objective_polynomial(case9, mode).evaluate(v)
    assert problem.objective(relaxation.lift_point(v)) == pytest.approx(expected, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("hierarchy", ["real", "complex"])
def test_moment_blocks_are_psd_at_lifted_points(case2, rng, hierarchy):
    relaxation = ASSEMBLERS[hierarchy](case2, dense_structure(case2), [2, 2])
    for _ in range(5):
        y = relaxation.lift_point(random_voltages(case2, rng))
        assert y[0] == 1.0
        for block in relaxation.moment_blocks():
            assert np.linalg.eigvalsh(block.evaluate(y))[0] >= -1e-9


def test_localizing_block_is_scaled_moment_block(case2, rng):
    relaxation = assemble_real(case2, dense_structure(case2), [2, 2])
    v = random_voltages(case2, rng)
    y = relaxation.lift_point(v)
    (moment,) = relaxation.moment_blocks()
    basis_values = moment.evaluate(y)[0, :4]
    localizing = named_block(relaxation, "V[bus 1]_min").evaluate(y)
    g = abs(v[1]) ** 2 - case2.buses[1].v_min ** 2
    np.testing.assert_allclose(localizing, g * np.outer(basis_values, basis_values), atol=1e-12)


@pytest.mark.slow
@pytest.mark.parametrize("hierarchy", ["real", "complex"])
@pytest.mark.parametrize("orders", [[1, 1], [2, 2]])
def test_feasible_points_satisfy_relaxation(case2, hierarchy, orders):
    local = solve_local(case2, starts=3)
    assert local is not None
    relaxation = ASSEMBLERS[hierarchy](case2, dense_structure(case2), orders)
    problem = relaxation.to_sdp_problem()
    assert residuals(problem, relaxation.lift_point(local.voltages)).primal <= 1e-7


def test_hermitian_to_real_examples(rng):
    np.testing.assert_array_equal(hermitian_to_real(np.array([[2.5]])), np.diag([2.5, 2.5]))
    image = hermitian_to_real(np.array([[1.0, 1j], [-1j, 1.0]]))
    np.testing.assert_allclose(np.linalg.eigvalsh(image), [0.0, 0.0, 2.0, 2.0], atol=1e-12)
    raw = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    h = raw + raw.conj().T
    doubled = np.sort(np.repeat(np.linalg.eigvalsh(h), 2))
    np.testing.assert_allclose(np.linalg.eigvalsh(hermitian_to_real(h)), doubled, atol=1e-10)


def test_schur_flow_block_boundary():
    block = schur_flow_block({0: 1.0}, {1: 1.0}, 5.0, "flow", 0)
    assert np.linalg.eigvalsh(block.evaluate(np.array([3.0, 4.0])))[0] == pytest.approx(0.0, abs=1e-9)
    assert np.linalg.eigvalsh(block.evaluate(np.zeros(2)))[0] == pytest.approx(1.0)
    tight = schur_flow_block({0: 1.0}, {1: 1.0}, 4.9, "flow", 0)
    assert np.linalg.eigvalsh(tight.evaluate(np.array([3.0, 4.0])))[0] < 0
    with pytest.raises(ValueError):
        schur_flow_block({0: 1.0}, {1: 1.0}, 0.0, "flow", 0)


def test_schur_cost_block_is_epigraph():
    block = schur_cost_block(1, {0: 1.0}, 1.0, 0.0, 0.0, "cost", None)
    assert np.linalg.eigvalsh(block.evaluate(np.array([3.0, 9.0])))[0] == pytest.approx(0.0, abs=1e-9)
    assert np.linalg.eigvalsh(block.evaluate(np.array([3.0, 8.0])))[0] < 0
    with pytest.raises(ValueError):
        schur_cost_block(1, {0: 1.0}, -1.0, 0.0, 0.0, "cost", None)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["case2", "case9", "case14"])
def test_first_order_hierarchies_agree(request, name):
    case = request.getfixturevalue(name)
    options = RelaxationOptions(objective="loss")
    real = relaxation_value(case, "real", [1] * case.n, options)
    complex_value = relaxation_value(case, "complex", [1] * case.n, options)
    assert real == pytest.approx(complex_value, rel=1e-6, abs=1e-8)


@pytest.mark.slow
def test_dense_and_sparse_first_order_agree(case9):
    options = RelaxationOptions(objective="loss")
    sparse = relaxation_value(case9, "real", [1] * case9.n, options)
    dense = relaxation_value(case9, "real", [1] * case9.n, options, dense_structure(case9))
    assert sparse == pytest.approx(dense, rel=1e-6, abs=1e-8)


@pytest.mark.slow
def test_sphere_constraint_is_redundant(case9):
    plain = relaxation_value(case9, "complex", [1] * case9.n, RelaxationOptions(objective="loss"))
    sphere = relaxation_value(case9, "complex", [1] * case9.n, RelaxationOptions(objective="loss", sphere=True))
    assert sphere == pytest.approx(plain, rel=1e-6, abs=1e-8)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["case2", "wb2"])
def test_bounds_tighten_with_order_and_stay_below_local_optimum(request, name):
    case = request.getfixturevalue(name)
    first = relaxation_value(case, "real", [1, 1])
    second = relaxation_value(case, "real", [2, 2])
    assert second >= first - 1e-7 * max(1.0, abs(first))
    local = solve_local(case, starts=5)
    assert local is not None
    assert second <= local.objective + 1e-6 * max(1.0, abs(local.objective))
    assert second >= relaxation_value(case, "complex", [2, 2]) - 1e-6 * max(1.0, abs(second))


@pytest.mark.parametrize("hierarchy", ["real", "complex"])
@pytest.mark.parametrize("name", ["case2", "wb2"])
def test_first_order_solves_to_optimal(request, name, hierarchy):
    case = request.getfixturevalue(name)
    relaxation = ASSEMBLERS[hierarchy](case, sparsity_structure(case), [1, 1])
    solution = solve(relaxation.to_sdp_problem())
    assert solution.status == "optimal"
    assert max(solution.residuals) <= 1e-7
