# Third-Party Library Imports
import numpy as np
import pytest

# Local Application Imports
from src.common import complex_basis_size, real_basis_size
from src.polynomial import (
    DegreeLimitError,
    MomentIndex,
    NonHermitianError,
    PolyC,
    PolyR,
    PolynomialError,
    VariableLayout,
    basis_complex,
    basis_real,
    hermitian_form_complex,
    hermitian_form_real,
    lift_complex,
    lift_real,
    monomial_basis,
    multiply,
    render_complex,
    render_real,
)


def real_moments(idx: MomentIndex, xi: np.ndarray) -> np.ndarray:
    values = np.zeros(len(idx))
    for var_id in idx.moment_ids():
        monomial, _ = idx.lookup(var_id)
        values[var_id] = np.prod(xi ** np.asarray(monomial))
    return values


def complex_moments(idx: MomentIndex, z: np.ndarray) -> np.ndarray:
    values = np.zeros(len(idx))
    for var_id in idx.moment_ids():
        (alpha, beta), part = idx.lookup(var_id)
        moment = np.prod(z ** np.asarray(alpha)) * np.prod(np.conj(z) ** np.asarray(beta))
        values[var_id] = moment.real if part == "re" else moment.imag
    return values


def evaluate(form, values: np.ndarray) -> float:
    return sum(coef * values[var_id] for var_id, coef in form.items())


def test_graded_lex_order():
    assert monomial_basis(range(2), 2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert monomial_basis([2], 2, 3) == [(0, 0, 0), (0, 0, 1), (0, 0, 2)]


@pytest.mark.parametrize("n, order", [(2, 1), (2, 2), (3, 2), (5, 2), (4, 3)])
def test_basis_sizes(n, order):
    assert len(basis_real(n, order)) == real_basis_size(n, order)
    assert len(basis_complex(n, order)) == complex_basis_size(n, order)


def test_ten_bus_third_order_sizes():
    assert real_basis_size(10, 3) == 1540
    assert 2 * complex_basis_size(10, 3) == 572


def test_negative_order_rejected():
    with pytest.raises(ValueError):
        monomial_basis(range(3), -1, 3)


def test_renderings():
    assert render_real((0, 2, 0)) == "y_020"
    assert render_complex(((0, 1), (0, 1))) == "ŷ_{01,01}"
    assert render_real((10, 0)) == "y_10,0"


def test_layout_round_trip(rng):
    layout = VariableLayout(4, 2)
    assert layout.num_real_vars == 7
    assert layout.vq(2) is None
    assert [layout.bus_of(var) for var in range(7)] == [0, 1, 2, 3, 0, 1, 3]
    assert layout.bus_variables([2, 3]) == [2, 3, 6]
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    v[2] = v[2].real
    np.testing.assert_allclose(layout.voltages(layout.xi(v)), v)


def test_multiply_convolves_coefficients(rng):
    a = PolyR(2, {(1, 0): 2.0, (0, 0): 1.0})
    b = PolyR(2, {(0, 1): 3.0, (1, 0): -1.0})
    product = multiply(a, b)
    point = rng.normal(size=2)
    assert product.evaluate(point) == pytest.approx(a.evaluate(point) * b.evaluate(point))
    assert product.degree == 2


def test_zero_coefficients_are_dropped():
    assert PolyR(2, {(1, 0): 0.0}).terms == {}


def test_hermitian_forms_agree(rng):
    n = 3
    raw = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    matrix = raw + raw.conj().T
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    v[0] = abs(v[0])
    expected = float(np.real(np.conj(v) @ matrix @ v))
    complex_form = hermitian_form_complex(matrix)
    assert complex_form.is_hermitian()
    assert complex_form.evaluate(v).real == pytest.approx(expected)
    layout = VariableLayout(n, 0)
    assert hermitian_form_real(matrix, layout).evaluate(layout.xi(v)) == pytest.approx(expected)


def test_lift_real_is_evaluation_at_moments(rng):
    layout = VariableLayout(3, 0)
    g = multiply(hermitian_form_real(np.diag([1.0, 2.0, 0.5]), layout), PolyR.variable(5, 3, 2.0))
    idx = MomentIndex("real", 5, 4)
    form = lift_real(g, idx)
    xi = rng.normal(size=5)
    assert evaluate(form, real_moments(idx, xi)) == pytest.approx(g.evaluate(xi))


def test_lift_complex_is_evaluation_at_moments(rng):
    raw = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    g = hermitian_form_complex(raw + raw.conj().T)
    square = multiply(g, g)
    idx = MomentIndex("complex", 3, 4)
    form = lift_complex(square, idx)
    z = rng.normal(size=3) + 1j * rng.normal(size=3)
    assert evaluate(form, complex_moments(idx, z)) == pytest.approx(square.evaluate(z).real)


def test_conjugate_labels_share_variables():
    idx = MomentIndex("complex", 2, 2)
    forward = idx.complex_form((1, 0), (0, 1))
    backward = idx.complex_form((0, 1), (1, 0))
    assert forward.keys() == backward.keys()
    assert [forward[k] for k in forward] == [np.conj(backward[k]) for k in forward]
    diagonal = idx.complex_form((1, 0), (1, 0))
    assert len(diagonal) == 1


def test_degree_limit_enforced():
    idx = MomentIndex("real", 2, 2)
    with pytest.raises(DegreeLimitError):
        idx.real_id((2, 1))


def test_non_hermitian_lift_rejected():
    g = PolyC(2, {((1, 0), (0, 1)): 1.0})
    with pytest.raises(NonHermitianError):
        lift_complex(g, MomentIndex("complex", 2, 2))


def test_auxiliary_names_are_unique():
    idx = MomentIndex("real", 2, 2)
    var_id = idx.add_auxiliary("t_0")
    assert idx.describe(var_id) == "t_0"
    assert var_id not in idx.moment_ids()
    with pytest.raises(PolynomialError):
        idx.add_auxiliary("t_0")
