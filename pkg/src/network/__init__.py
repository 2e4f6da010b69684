from .case_parser import case_from_json, case_to_json, load_case, parse_case
from .matrices import (
    CostTerm,
    FlowMatrices,
    HermitianMatrixSet,
    ObjectivePolynomial,
    build_matrices,
    injection_oracle,
    objective_polynomial,
)
from .network_case import (
    BusGeneration,
    BusRecord,
    CaseError,
    CaseSemanticError,
    CaseSyntaxError,
    GenRecord,
    InfeasibleCaseError,
    LineRecord,
    NetworkCase,
    aggregate_bus_generation,
    reference_buses,
)
from .preprocess import MergeResult, PreprocessError, preprocess_low_impedance

__all__ = [
    "BusGeneration",
    "BusRecord",
    "CaseError",
    "CaseSemanticError",
    "CaseSyntaxError",
    "CostTerm",
    "FlowMatrices",
    "GenRecord",
    "HermitianMatrixSet",
    "InfeasibleCaseError",
    "LineRecord",
    "MergeResult",
    "NetworkCase",
    "ObjectivePolynomial",
    "PreprocessError",
    "aggregate_bus_generation",
    "build_matrices",
    "case_from_json",
    "case_to_json",
    "injection_oracle",
    "load_case",
    "objective_polynomial",
    "parse_case",
    "preprocess_low_impedance",
]
