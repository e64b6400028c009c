from .embed import hermitian_embed, hermitian_unembed
from .program import ComplexVectorVar, ConeProgram, Constraint, HermitianVar, LinExpr, ScalarVar
from .solver import DEFAULT_MAX_ITER, DEFAULT_TOL, FALLBACK_TOL, ConeSolution, Status, solve, solve_with_retry

__all__ = [
    "ComplexVectorVar",
    "ConeProgram",
    "ConeSolution",
    "Constraint",
    "DEFAULT_MAX_ITER",
    "DEFAULT_TOL",
    "FALLBACK_TOL",
    "HermitianVar",
    "LinExpr",
    "ScalarVar",
    "Status",
    "hermitian_embed",
    "hermitian_unembed",
    "solve",
    "solve_with_retry",
]
