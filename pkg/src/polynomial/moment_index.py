# Standard Library Imports
from typing import Dict, List, Literal, Optional, Tuple, Union

# Local Application Imports
from src.common import ComplexForm, ComplexMonomial, Exponent, Hierarchy, LinearForm, RealMonomial

from .monomials import render_complex, render_real
from .polynomials import PolyC, PolyR, PolynomialError

VariablePart = Literal["real", "re", "im", "aux"]


class DegreeLimitError(PolynomialError):
    """Raised when a monomial exceeds the degree the index was configured for."""


class NonHermitianError(PolynomialError):
    """Raised when a complex polynomial expected to be real-valued is not Hermitian."""


class MomentIndex:
    """
    Bijection between canonical monomial labels and contiguous real variable ids.

    Real labels get one id each. A complex label (alpha, beta) is stored under its canonical
    representative (alpha >= beta lexicographically): diagonal labels carry one real id, off-diagonal
    labels a (Re, Im) pair, and the conjugate label reads the same pair with the imaginary part negated.
    Auxiliary scalars (epigraph and slack variables) are appended as named ids.

    The constant monomial always has id 0.
    """

    def __init__(self, kind: Hierarchy, num_vars: int, max_degree: int):
        self.kind = kind
        self.num_vars = num_vars
        self.max_degree = max_degree
        self._real_ids: Dict[RealMonomial, int] = {}
        self._complex_ids: Dict[ComplexMonomial, Tuple[int, Optional[int]]] = {}
        self._aux_ids: Dict[str, int] = {}
        self._entries: List[Tuple[Union[RealMonomial, ComplexMonomial, str], VariablePart]] = []

        zero = (0,) * num_vars
        if kind == "real":
            self.real_id(zero)
        else:
            self.complex_ids((zero, zero))

    def __len__(self) -> int:
        return len(self._entries)

    def _new_id(self, label: Union[RealMonomial, ComplexMonomial, str], part: VariablePart) -> int:
        self._entries.append((label, part))
        return len(self._entries) - 1

    def real_id(self, monomial: RealMonomial) -> int:
        """Get-or-insert the id of y_alpha."""
        existing = self._real_ids.get(monomial)
        if existing is not None:
            return existing
        if self.kind != "real":
            raise PolynomialError("Real monomial requested from a complex moment index.")
        if sum(monomial) > self.max_degree:
            raise DegreeLimitError(f"Monomial {render_real(monomial)} exceeds degree {self.max_degree}.")
        var_id = self._new_id(monomial, "real")
        self._real_ids[monomial] = var_id
        return var_id

    def complex_ids(self, label: ComplexMonomial) -> Tuple[int, Optional[int]]:
        """
        Get-or-insert the (Re, Im) ids of the canonical representative of a complex label.

        Returns:
            Tuple[int, Optional[int]]: Real-part id and imaginary-part id (None on the diagonal).
        """
        alpha, beta = label
        canonical = (alpha, beta) if alpha >= beta else (beta, alpha)
        existing = self._complex_ids.get(canonical)
        if existing is not None:
            return existing
        if self.kind != "complex":
            raise PolynomialError("Complex label requested from a real moment index.")
        if sum(alpha) + sum(beta) > self.max_degree:
            raise DegreeLimitError(f"Label {render_complex(label)} exceeds degree {self.max_degree}.")
        re_id = self._new_id(canonical, "re")
        im_id = None if canonical[0] == canonical[1] else self._new_id(canonical, "im")
        self._complex_ids[canonical] = (re_id, im_id)
        return re_id, im_id

    def complex_form(self, alpha: Exponent, beta: Exponent) -> ComplexForm:
        """Linear form of ŷ_{alpha,beta} over real ids: Re + j Im, or Re - j Im for the conjugate label."""
        re_id, im_id = self.complex_ids((alpha, beta))
        if im_id is None:
            return {re_id: 1.0 + 0j}
        return {re_id: 1.0 + 0j, im_id: 1j if alpha >= beta else -1j}

    def add_auxiliary(self, name: str) -> int:
        if name in self._aux_ids:
            raise PolynomialError(f"Auxiliary variable {name} already registered.")
        var_id = self._new_id(name, "aux")
        self._aux_ids[name] = var_id
        return var_id

    def lookup(self, var_id: int) -> Tuple[Union[RealMonomial, ComplexMonomial, str], VariablePart]:
        """Label and part stored under an id."""
        return self._entries[var_id]

    def describe(self, var_id: int) -> str:
        """Debug name of a variable, e.g. y_020, ŷ_{01,01} or Im ŷ_{10,01}."""
        label, part = self._entries[var_id]
        if part == "aux":
            return str(label)
        if part == "real":
            return render_real(label)  # type: ignore[arg-type]
        rendered = render_complex(label)  # type: ignore[arg-type]
        alpha, beta = label  # type: ignore[misc]
        if alpha == beta:
            return rendered
        return f"{'Re' if part == 're' else 'Im'} {rendered}"

    def moment_ids(self) -> List[int]:
        """Ids of all lifted monomial variables (auxiliaries excluded)."""
        return [i for i, (_, part) in enumerate(self._entries) if part != "aux"]


def lift_real(g: PolyR, idx: MomentIndex) -> LinearForm:
    """
    L_y{g}: replace each monomial xi^alpha of g by the moment variable y_alpha.

    Args:
        g (PolyR): Polynomial to lift.
        idx (MomentIndex): Real moment index; unseen monomials are registered.

    Returns:
        LinearForm: Coefficient g_alpha on id(alpha).

    Raises:
        DegreeLimitError: If a monomial exceeds the index's degree limit.
    """
    form: LinearForm = {}
    for monomial, coef in g.items():
        var_id = idx.real_id(monomial)
        form[var_id] = form.get(var_id, 0.0) + coef
    return {k: v for k, v in form.items() if v != 0}


def lift_complex(g: PolyC, idx: MomentIndex) -> LinearForm:
    """
    L̂_ŷ{g}: replace each zeta^alpha conj(zeta)^beta by ŷ_{alpha,beta} and collect real parts.

    Conjugate-pair terms combine into 2 Re(g ŷ), so the result is a real form over (Re ŷ, Im ŷ) ids.

    Raises:
        NonHermitianError: If g is not Hermitian-symmetric.
    """
    if not g.is_hermitian():
        raise NonHermitianError("Cannot lift a non-Hermitian complex polynomial to a real form.")
    form: LinearForm = {}
    for (alpha, beta), coef in g.items():
        for var_id, unit in idx.complex_form(alpha, beta).items():
            form[var_id] = form.get(var_id, 0.0) + (coef * unit).real
    return {k: v for k, v in form.items() if v != 0}
