# Standard Library Imports
from dataclasses import dataclass

# Local Application Imports
from src.common import CostForm, ObjectiveMode

_COST_FORMS = ("auto", "schur", "direct", "both")
_OBJECTIVES = ("cost", "loss")


@dataclass(frozen=True)
class RelaxationOptions:
    """
    Immutable options shared by both hierarchies.

    Attributes:
        objective (ObjectiveMode): Generation cost or active losses.
        cost_form (CostForm): How quartic cost and flow terms enter. "auto" uses Schur blocks at order 1 and
            both Schur blocks and direct localizing constraints from order 2 on.
        sphere (bool): Add the redundant norm equality (complex hierarchy only).
        merge_cliques (bool): Coarsen the clique tree with the default merge rule.
        couple_injections (bool): Build cliques from the coupling graph, so every bus constraint fits one clique.
        variable_bounds (bool): Bound lifted variables by products of voltage magnitude limits.
    """

    objective: ObjectiveMode = "cost"
    cost_form: CostForm = "auto"
    sphere: bool = False
    merge_cliques: bool = False
    couple_injections: bool = True
    variable_bounds: bool = True

    def __post_init__(self) -> None:
        if self.objective not in _OBJECTIVES:
            raise ValueError(f"Unknown objective {self.objective!r}; expected one of {_OBJECTIVES}.")
        if self.cost_form not in _COST_FORMS:
            raise ValueError(f"Unknown cost form {self.cost_form!r}; expected one of {_COST_FORMS}.")

    def resolved_cost_form(self, order: int) -> CostForm:
        """The concrete form used at a given order: "auto" becomes "schur" at order 1 and "both" above."""
        if self.cost_form != "auto":
            return self.cost_form
        return "schur" if order < 2 else "both"
