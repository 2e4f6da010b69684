from .blocks import (
    Census,
    FirstOrderBlock,
    LinearConstraint,
    OrderTooLowError,
    Relaxation,
    SymbolicBlock,
    evaluate_form,
    hermitian_to_real,
    render_form,
    schur_cost_block,
    schur_flow_block,
)
from .builder import RelaxationBuilder, dense_structure, sparsity_structure
from .complex_hierarchy import ComplexRelaxationBuilder, assemble_complex, localizing_matrix_c, moment_matrix_c
from .options import RelaxationOptions
from .real_hierarchy import RealRelaxationBuilder, assemble_real, localizing_matrix, moment_matrix

__all__ = [
    "Census",
    "ComplexRelaxationBuilder",
    "FirstOrderBlock",
    "LinearConstraint",
    "OrderTooLowError",
    "RealRelaxationBuilder",
    "Relaxation",
    "RelaxationBuilder",
    "RelaxationOptions",
    "SymbolicBlock",
    "assemble_complex",
    "assemble_real",
    "dense_structure",
    "evaluate_form",
    "hermitian_to_real",
    "localizing_matrix",
    "localizing_matrix_c",
    "moment_matrix",
    "moment_matrix_c",
    "render_form",
    "schur_cost_block",
    "schur_flow_block",
    "sparsity_structure",
]
