# Standard Library Imports
from typing import Dict, Iterator, Mapping, Optional, Tuple, Union, overload

# Third-Party Library Imports
import numpy as np

# Local Application Imports
from src.common import ComplexMonomial, RealMonomial

from .monomials import VariableLayout, add_exponents, unit_exponent

Scalar = Union[int, float]


class PolynomialError(Exception):
    """Custom exception for invalid polynomial operations."""

    def __init__(self, message: str, original_exception: Union[Exception, None] = None):
        super().__init__(message)
        self.original_exception = original_exception
        self.message = message


class PolyR:
    """
    Real polynomial in the voltage components xi, stored as {exponent vector: coefficient}.

    Zero coefficients are never stored.
    """

    __slots__ = ("num_vars", "terms")

    def __init__(self, num_vars: int, terms: Optional[Mapping[RealMonomial, float]] = None):
        self.num_vars = num_vars
        self.terms: Dict[RealMonomial, float] = {}
        for monomial, coef in (terms or {}).items():
            if len(monomial) != num_vars:
                raise PolynomialError(f"Exponent {monomial} does not have {num_vars} entries.")
            if coef != 0:
                self.terms[monomial] = float(coef)

    @classmethod
    def constant(cls, num_vars: int, value: float) -> "PolyR":
        return cls(num_vars, {(0,) * num_vars: value})

    @classmethod
    def variable(cls, num_vars: int, position: int, coef: float = 1.0) -> "PolyR":
        return cls(num_vars, {unit_exponent(position, num_vars): coef})

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def items(self) -> Iterator[Tuple[RealMonomial, float]]:
        return iter(self.terms.items())

    def evaluate(self, point: np.ndarray) -> float:
        """Value at xi = point."""
        x = np.asarray(point, dtype=float)
        total = 0.0
        for monomial, coef in self.terms.items():
            total += coef * float(np.prod(x ** np.asarray(monomial)))
        return total

    def _combine(self, other: "PolyR", sign: float) -> "PolyR":
        if self.num_vars != other.num_vars:
            raise PolynomialError("Cannot combine polynomials over different variable counts.")
        merged = dict(self.terms)
        for monomial, coef in other.terms.items():
            merged[monomial] = merged.get(monomial, 0.0) + sign * coef
        return PolyR(self.num_vars, merged)

    def __add__(self, other: Union["PolyR", Scalar]) -> "PolyR":
        if isinstance(other, (int, float)):
            return self._combine(PolyR.constant(self.num_vars, other), 1.0)
        return self._combine(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other: Union["PolyR", Scalar]) -> "PolyR":
        if isinstance(other, (int, float)):
            return self._combine(PolyR.constant(self.num_vars, other), -1.0)
        return self._combine(other, -1.0)

    def __rsub__(self, other: Scalar) -> "PolyR":
        return PolyR.constant(self.num_vars, other)._combine(self, -1.0)

    def __neg__(self) -> "PolyR":
        return PolyR(self.num_vars, {m: -c for m, c in self.terms.items()})

    def __mul__(self, other: Union["PolyR", Scalar]) -> "PolyR":
        if isinstance(other, (int, float)):
            return PolyR(self.num_vars, {m: c * other for m, c in self.terms.items()})
        return multiply(self, other)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PolyR) and self.num_vars == other.num_vars and self.terms == other.terms

    def __repr__(self) -> str:
        return f"PolyR({self.num_vars}, {self.terms})"


class PolyC:
    """
    Polynomial in zeta and conj(zeta), stored as {(alpha, beta): coefficient}.

    Polynomials describing real quantities satisfy conj(g[alpha, beta]) == g[beta, alpha].
    """

    __slots__ = ("num_vars", "terms")

    def __init__(self, num_vars: int, terms: Optional[Mapping[ComplexMonomial, complex]] = None):
        self.num_vars = num_vars
        self.terms: Dict[ComplexMonomial, complex] = {}
        for label, coef in (terms or {}).items():
            alpha, beta = label
            if len(alpha) != num_vars or len(beta) != num_vars:
                raise PolynomialError(f"Label {label} does not have {num_vars} entries per exponent.")
            if coef != 0:
                self.terms[(tuple(alpha), tuple(beta))] = complex(coef)

    @classmethod
    def constant(cls, num_vars: int, value: complex) -> "PolyC":
        zero = (0,) * num_vars
        return cls(num_vars, {(zero, zero): value})

    @property
    def degree(self) -> int:
        return max((sum(a) + sum(b) for a, b in self.terms), default=0)

    def items(self) -> Iterator[Tuple[ComplexMonomial, complex]]:
        return iter(self.terms.items())

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        for (alpha, beta), coef in self.terms.items():
            mirror = self.terms.get((beta, alpha), 0.0)
            if abs(np.conj(coef) - mirror) > tol * max(1.0, abs(coef)):
                return False
        return True

    def conjugate(self) -> "PolyC":
        """Coefficient map with labels swapped and coefficients conjugated."""
        return PolyC(self.num_vars, {(b, a): np.conj(c) for (a, b), c in self.terms.items()})

    def evaluate(self, point: np.ndarray) -> complex:
        z = np.asarray(point, dtype=complex)
        zc = np.conj(z)
        total = 0j
        for (alpha, beta), coef in self.terms.items():
            total += coef * np.prod(z ** np.asarray(alpha)) * np.prod(zc ** np.asarray(beta))
        return complex(total)

    def _combine(self, other: "PolyC", sign: float) -> "PolyC":
        if self.num_vars != other.num_vars:
            raise PolynomialError("Cannot combine polynomials over different variable counts.")
        merged = dict(self.terms)
        for label, coef in other.terms.items():
            merged[label] = merged.get(label, 0j) + sign * coef
        return PolyC(self.num_vars, merged)

    def __add__(self, other: Union["PolyC", Scalar, complex]) -> "PolyC":
        if isinstance(other, (int, float, complex)):
            return self._combine(PolyC.constant(self.num_vars, other), 1.0)
        return self._combine(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other: Union["PolyC", Scalar, complex]) -> "PolyC":
        if isinstance(other, (int, float, complex)):
            return self._combine(PolyC.constant(self.num_vars, other), -1.0)
        return self._combine(other, -1.0)

    def __rsub__(self, other: Scalar) -> "PolyC":
        return PolyC.constant(self.num_vars, other)._combine(self, -1.0)

    def __neg__(self) -> "PolyC":
        return PolyC(self.num_vars, {label: -c for label, c in self.terms.items()})

    def __mul__(self, other: Union["PolyC", Scalar, complex]) -> "PolyC":
        if isinstance(other, (int, float, complex)):
            return PolyC(self.num_vars, {label: c * other for label, c in self.terms.items()})
        return multiply(self, other)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PolyC) and self.num_vars == other.num_vars and self.terms == other.terms

    def __repr__(self) -> str:
        return f"PolyC({self.num_vars}, {self.terms})"


@overload
def multiply(a: PolyR, b: PolyR) -> PolyR: ...
@overload
def multiply(a: PolyC, b: PolyC) -> PolyC: ...


def multiply(a, b):
    """
    Exact coefficient convolution of two polynomials of the same kind.

    Args:
        a (PolyR | PolyC): Left factor.
        b (PolyR | PolyC): Right factor, same kind and variable count as `a`.

    Returns:
        PolyR | PolyC: The product.

    Raises:
        PolynomialError: If the factors are of different kinds or sizes.
    """
    if a.num_vars != b.num_vars:
        raise PolynomialError("Cannot multiply polynomials over different variable counts.")
    if isinstance(a, PolyR) and isinstance(b, PolyR):
        real_terms: Dict[RealMonomial, float] = {}
        for m1, c1 in a.terms.items():
            for m2, c2 in b.terms.items():
                key = add_exponents(m1, m2)
                real_terms[key] = real_terms.get(key, 0.0) + c1 * c2
        return PolyR(a.num_vars, real_terms)
    if isinstance(a, PolyC) and isinstance(b, PolyC):
        complex_terms: Dict[ComplexMonomial, complex] = {}
        for (a1, b1), c1 in a.terms.items():
            for (a2, b2), c2 in b.terms.items():
                key = (add_exponents(a1, a2), add_exponents(b1, b2))
                complex_terms[key] = complex_terms.get(key, 0j) + c1 * c2
        return PolyC(a.num_vars, complex_terms)
    raise PolynomialError(f"Cannot multiply {type(a).__name__} by {type(b).__name__}.")


def hermitian_form_complex(matrix: np.ndarray) -> PolyC:
    """
    The polynomial V^H M V = sum_ij M_ij conj(V_i) V_j over zeta = V.

    Args:
        matrix (np.ndarray): Square complex matrix M (Hermitian for real-valued forms).

    Returns:
        PolyC: Label (e_j, e_i) carries M_ij.
    """
    n = matrix.shape[0]
    terms: Dict[ComplexMonomial, complex] = {}
    rows, cols = np.nonzero(matrix)
    for i, j in zip(rows.tolist(), cols.tolist()):
        label = (unit_exponent(j, n), unit_exponent(i, n))
        terms[label] = terms.get(label, 0j) + complex(matrix[i, j])
    return PolyC(n, terms)


def hermitian_form_real(matrix: np.ndarray, layout: VariableLayout) -> PolyR:
    """
    The real polynomial Re(V^H M V) over xi for Hermitian M = A + jB.

    With V = x + jy the value is x^T A x + y^T A y - 2 x^T B y; terms involving the eliminated reference
    imaginary part vanish.

    Args:
        matrix (np.ndarray): Hermitian matrix.
        layout (VariableLayout): Real variable positions.

    Returns:
        PolyR: The quadratic form in xi.
    """
    num_vars = layout.num_real_vars
    terms: Dict[RealMonomial, float] = {}

    def add(p: Optional[int], q: Optional[int], coef: float) -> None:
        if p is None or q is None or coef == 0:
            return
        key = add_exponents(unit_exponent(p, num_vars), unit_exponent(q, num_vars))
        terms[key] = terms.get(key, 0.0) + coef

    rows, cols = np.nonzero(matrix)
    for i, j in zip(rows.tolist(), cols.tolist()):
        a = float(matrix[i, j].real)
        b = float(matrix[i, j].imag)
        add(layout.vd(i), layout.vd(j), a)
        add(layout.vq(i), layout.vq(j), a)
        add(layout.vd(i), layout.vq(j), -2.0 * b)
    return PolyR(num_vars, terms)
