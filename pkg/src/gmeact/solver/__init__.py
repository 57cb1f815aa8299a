"""Semidefinite programming: embedded ADMM solver and external-process adapter."""
from .conic import (
    INFEASIBLE,
    MAX_ITER,
    OPTIMAL,
    ConeConstraint,
    ConicProgram,
    EqualityConstraint,
    SolveReport,
    Term,
    min_eig_projection,
    solve_conic,
)

__all__ = [
    "INFEASIBLE",
    "MAX_ITER",
    "OPTIMAL",
    "ConeConstraint",
    "ConicProgram",
    "EqualityConstraint",
    "SolveReport",
    "Term",
    "min_eig_projection",
    "solve_conic",
]
