"""Two-copy activation of genuine multipartite entanglement, numerically.

Submodules
----------
linalg      dense states, partial transposes, fidelities
states      the biseparable three-qubit family rho(q) and its copies
pauli       Pauli decompositions and local measurement settings
solver      conic programs over Hermitian blocks (embedded ADMM, external adapter)
witness     fully decomposable witness search and certificate checks
bisep       biseparability certification by mixture subtraction
experiment  shot-level simulation, estimator, error propagation, tomography
cli         ``python -m gmeact`` subcommands
"""
from .linalg import DensityMatrix, Ket, fidelity, partial_transpose, purity
from .states import constituent_ket, mixture_weights, n_copy_state, single_copy_state
from .witness import Witness, build_problem, evaluate, load_paper_witness, solve, validate_certificate

__all__ = [
    "DensityMatrix",
    "Ket",
    "Witness",
    "build_problem",
    "constituent_ket",
    "evaluate",
    "fidelity",
    "load_paper_witness",
    "mixture_weights",
    "n_copy_state",
    "partial_transpose",
    "purity",
    "single_copy_state",
    "solve",
    "validate_certificate",
]

__version__ = "0.1.0"
