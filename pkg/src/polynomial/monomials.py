"""
monomials.py

Monomial bases in graded lexicographic order, the real-variable layout of bus voltages, and the
subscript renderings used in pattern dumps (y_020, ŷ_{01,01}).
"""

# Standard Library Imports
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Iterable, List, Optional, Sequence

# Third-Party Library Imports
import numpy as np

# Local Application Imports
from src.common import ComplexMonomial, Exponent, RealMonomial


def monomial_basis(variables: Iterable[int], order: int, num_vars: int) -> List[Exponent]:
    """
    All monomials of degree at most `order` in the given variables, graded lexicographic.

    Within a degree, exponent vectors appear in decreasing lexicographic order, which is the order of
    `combinations_with_replacement` over the sorted variable indices.

    Args:
        variables (Iterable[int]): Variable positions the monomials may use.
        order (int): Maximum total degree.
        num_vars (int): Length of the exponent vectors.

    Returns:
        List[Exponent]: The basis, starting with the constant monomial.
    """
    if order < 0:
        raise ValueError(f"Monomial order must be nonnegative, got {order}.")
    chosen = sorted(set(variables))
    basis: List[Exponent] = []
    for degree in range(order + 1):
        for combo in combinations_with_replacement(chosen, degree):
            exponents = [0] * num_vars
            for var in combo:
                exponents[var] += 1
            basis.append(tuple(exponents))
    return basis


def basis_real(n: int, order: int) -> List[RealMonomial]:
    """Dense real basis over the 2n - 1 voltage components (V_q of the reference bus eliminated)."""
    num_vars = 2 * n - 1
    return monomial_basis(range(num_vars), order, num_vars)


def basis_complex(n: int, order: int) -> List[ComplexMonomial]:
    """Dense complex basis: every (alpha, 0) with |alpha| <= order, no conjugated factors."""
    zero = (0,) * n
    return [(alpha, zero) for alpha in monomial_basis(range(n), order, n)]


def add_exponents(a: Exponent, b: Exponent) -> Exponent:
    return tuple(x + y for x, y in zip(a, b))


def unit_exponent(position: int, num_vars: int) -> Exponent:
    exponents = [0] * num_vars
    exponents[position] = 1
    return tuple(exponents)


def _digits(exponent: Exponent) -> str:
    if all(e < 10 for e in exponent):
        return "".join(str(e) for e in exponent)
    return ",".join(str(e) for e in exponent)


def render_real(monomial: RealMonomial) -> str:
    """Render y_alpha, e.g. y_020."""
    return f"y_{_digits(monomial)}"


def render_complex(label: ComplexMonomial) -> str:
    """Render ŷ_{alpha,beta}, e.g. ŷ_{01,01}."""
    alpha, beta = label
    return f"ŷ_{{{_digits(alpha)},{_digits(beta)}}}"


@dataclass(frozen=True)
class VariableLayout:
    """
    Position of each real voltage component in xi = [V_d1 ... V_dn, V_q (non-reference buses)].

    The reference bus keeps only its real part; its imaginary part is fixed at zero.
    """

    num_buses: int
    ref_bus: int

    @property
    def num_real_vars(self) -> int:
        return 2 * self.num_buses - 1

    def vd(self, bus: int) -> int:
        return bus

    def vq(self, bus: int) -> Optional[int]:
        if bus == self.ref_bus:
            return None
        return self.num_buses + (bus if bus < self.ref_bus else bus - 1)

    def bus_of(self, var: int) -> int:
        """Bus owning a real variable position."""
        if var < self.num_buses:
            return var
        offset = var - self.num_buses
        return offset if offset < self.ref_bus else offset + 1

    def bus_variables(self, buses: Iterable[int]) -> List[int]:
        """Sorted real variable positions of a bus set."""
        positions: List[int] = []
        for bus in buses:
            positions.append(self.vd(bus))
            vq = self.vq(bus)
            if vq is not None:
                positions.append(vq)
        return sorted(positions)

    def xi(self, voltages: Sequence[complex]) -> np.ndarray:
        """Real coordinates of a voltage vector; the reference imaginary part is dropped."""
        v = np.asarray(voltages, dtype=complex)
        out = np.empty(self.num_real_vars)
        out[: self.num_buses] = v.real
        for bus in range(self.num_buses):
            vq = self.vq(bus)
            if vq is not None:
                out[vq] = v[bus].imag
        return out

    def voltages(self, xi: Sequence[float]) -> np.ndarray:
        """Complex voltages from real coordinates."""
        x = np.asarray(xi, dtype=float)
        out = x[: self.num_buses].astype(complex)
        for bus in range(self.num_buses):
            vq = self.vq(bus)
            if vq is not None:
                out[bus] += 1j * x[vq]
        return out
