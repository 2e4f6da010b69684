from .moment_index import DegreeLimitError, MomentIndex, NonHermitianError, lift_complex, lift_real
from .monomials import (
    VariableLayout,
    add_exponents,
    basis_complex,
    basis_real,
    monomial_basis,
    render_complex,
    render_real,
    unit_exponent,
)
from .polynomials import PolyC, PolyR, PolynomialError, hermitian_form_complex, hermitian_form_real, multiply

__all__ = [
    "DegreeLimitError",
    "MomentIndex",
    "NonHermitianError",
    "PolyC",
    "PolyR",
    "PolynomialError",
    "VariableLayout",
    "add_exponents",
    "basis_complex",
    "basis_real",
    "hermitian_form_complex",
    "hermitian_form_real",
    "lift_complex",
    "lift_real",
    "monomial_basis",
    "multiply",
    "render_complex",
    "render_real",
    "unit_exponent",
]
