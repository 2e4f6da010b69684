# Third-Party Library Imports
import numpy as np
import pytest

# Local Application Imports
from src.sdp import SDPFormatError, SDPProblem, export_sdpa, import_sdpa, import_sdpa_solution, make_block

from .conftest import FIXTURES_DIR, two_by_two


def scalar_problem() -> SDPProblem:
    return SDPProblem.build(c=[1.0], blocks=[make_block("scalar", np.zeros((1, 1)), [(0, np.ones((1, 1)))], 1)])


def mixed_problem() -> SDPProblem:
    block = make_block(
        "moment",
        np.array([[1.0, 0.1, 0.0], [0.1, 0.0, -0.25], [0.0, -0.25, 0.0]]),
        [(0, np.diag([0.0, 1.0, 0.0])), (2, np.array([[0.0, 0.0, 0.3], [0.0, 0.0, 0.0], [0.3, 0.0, 1.0]]))],
        3,
    )
    return SDPProblem.build(
        c=[1.0, -0.5, 1 / 3],
        blocks=[block, make_block("tail", np.eye(1), [(1, np.array([[2.0]]))], 3)],
        lp_matrix=np.array([[1.0, 0.0, 2.0], [0.0, -1.0, 0.0]]),
        lp_offset=[0.5, 1e-17],
        eq_matrix=np.array([[0.0, 1.0, 1.0]]),
        eq_rhs=[0.7],
        lower=[-1.0, -np.inf, 0.0],
        upper=[1.0, 2.5, np.inf],
        offset=12.125,
    )


def assert_same_problem(a: SDPProblem, b: SDPProblem) -> None:
    assert np.array_equal(a.c, b.c)
    assert a.offset == b.offset
    assert len(a.blocks) == len(b.blocks)
    for left, right in zip(a.blocks, b.blocks):
        assert left.name == right.name
        assert np.array_equal(left.f0, right.f0)
        assert np.array_equal(left.coefficients.toarray(), right.coefficients.toarray())
    for attr in ("lp_matrix", "eq_matrix"):
        assert np.array_equal(getattr(a, attr).toarray(), getattr(b, attr).toarray())
    assert np.array_equal(a.lp_offset, b.lp_offset)
    assert np.array_equal(a.eq_rhs, b.eq_rhs)
    assert np.array_equal(a.lower, b.lower)
    assert np.array_equal(a.upper, b.upper)


def test_scalar_export_matches_golden_text():
    assert export_sdpa(scalar_problem()) == (FIXTURES_DIR / "scalar.dat-s").read_text()


def test_round_trip_is_exact():
    problem = mixed_problem()
    text = export_sdpa(problem)
    again = import_sdpa(text)
    assert_same_problem(problem, again)
    assert export_sdpa(again) == text


def test_export_header_marks_diagonal_blocks():
    lines = export_sdpa(mixed_problem()).splitlines()
    body = [line for line in lines if not line.startswith("*")]
    assert body[0] == "3"
    assert body[1] == "5"
    assert body[2] == "3 1 -2 -2 -4"
    assert "* eq-block 4" in lines
    assert "* bound-block 5" in lines


def test_foreign_diagonal_block_reads_as_linear_rows():
    problem = import_sdpa("2\n1\n-2\n1.0 1.0\n0 1 1 1 3.0\n1 1 1 1 1.0\n2 1 2 2 1.0\n")
    assert problem.blocks == ()
    assert problem.lp_matrix.toarray().tolist() == [[1.0, 0.0], [0.0, 1.0]]
    assert problem.lp_offset.tolist() == [-3.0, 0.0]


def test_sdpa_punctuation_is_accepted():
    problem = import_sdpa("1\n1\n{1}\n{1.0}\n1 1 1 1 1.0\n")
    assert problem.blocks[0].dim == 1


@pytest.mark.parametrize(
    "text",
    [
        "",
        "* only a comment\n",
        "2\n1\n",
        "1\n1\n1\n1.0\n1 1 1 1\n",
        "1\n1\n1\n1.0\n1 2 1 1 1.0\n",
        "1\n1\n-2\n1.0\n1 1 1 2 1.0\n",
    ],
)
def test_malformed_problem_text(text):
    with pytest.raises(SDPFormatError):
        import_sdpa(text)


def test_csdp_solution_fixture():
    solution = import_sdpa_solution((FIXTURES_DIR / "two_by_two.sol").read_text(), two_by_two())
    assert solution.status == "optimal"
    assert solution.objective == pytest.approx(2.0, abs=1e-6)
    assert solution.dual_objective == pytest.approx(2.0, abs=1e-6)
    np.testing.assert_allclose(solution.duals.blocks[0], [[1.0, -1.0], [-1.0, 1.0]])


def test_sdpa_output_fixture():
    solution = import_sdpa_solution((FIXTURES_DIR / "two_by_two.out").read_text(), two_by_two())
    assert solution.status == "optimal"
    assert solution.objective == pytest.approx(2.0, abs=1e-6)
    assert np.isnan(solution.dual_objective)


def test_solution_status_from_caller_wins():
    text = (FIXTURES_DIR / "two_by_two.sol").read_text()
    solution = import_sdpa_solution(text, two_by_two(), status="infeasible")
    assert solution.status == "infeasible"
    assert solution.certificate is not None


def test_residuals_decide_status_of_poor_points():
    solution = import_sdpa_solution("0.5 0.5\n", two_by_two())
    assert solution.status == "numerical_failure"


def test_empty_solution_text():
    with pytest.raises(SDPFormatError):
        import_sdpa_solution("  \n", two_by_two())


def test_solution_of_wrong_length():
    with pytest.raises(SDPFormatError):
        import_sdpa_solution("1.0 1.0 1.0\n", two_by_two())
