"""The three-qubit constituent states and the mixtures built from them.

Constituents 0-3 are ``|+/->_A (x) |Phi+/->_BC`` without (0, 1) and with
(2, 3) the phase layer ``sqrt(Z) (x) sqrt(Z) (x) Z``; 4-7 are the same kets
with qubits A and B exchanged; 8 and 9 are ``|001>`` and ``|110>``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import DensityMatrix, Ket, permute_subsystems, projector

N_CONSTITUENTS = 10
MAX_COPIES = 3

A_BC = "A|BC"
B_AC = "B|AC"
PRODUCT = "product"

SQRT_Z = np.diag([1.0, 1.0j])
PAULI_Z = np.diag([1.0, -1.0])

_S2 = np.sqrt(2.0)
_PLUS = np.array([1.0, 1.0]) / _S2
_MINUS = np.array([1.0, -1.0]) / _S2
_PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0]) / _S2
_PHI_MINUS = np.array([1.0, 0.0, 0.0, -1.0]) / _S2
_PHASE_LAYER = np.kron(np.kron(SQRT_Z, SQRT_Z), PAULI_Z)


@dataclass(frozen=True)
class ConstituentSet:
    kets: tuple
    labels: tuple

    def __len__(self):
        return len(self.kets)


def bipartition_label(i: int) -> str:
    _check_index(i)
    if i < 4:
        return A_BC
    if i < 8:
        return B_AC
    return PRODUCT


def _check_index(i):
    if not 0 <= int(i) < N_CONSTITUENTS:
        raise IndexError(f"constituent index {i} out of range 0..9")


def _swap_ab(v):
    return v.reshape(2, 2, 2).transpose(1, 0, 2).reshape(8)


def _amplitudes(i):
    if i >= 8:
        v = np.zeros(8, dtype=complex)
        v[0b001 if i == 8 else 0b110] = 1.0
        return v
    if i >= 4:
        return _swap_ab(_amplitudes(i - 4))
    sign_plus = i % 2 == 0
    v = np.kron(_PLUS if sign_plus else _MINUS, _PHI_PLUS if sign_plus else _PHI_MINUS).astype(complex)
    if i >= 2:
        v = _PHASE_LAYER @ v
    return v


def constituent_ket(i: int) -> Ket:
    _check_index(i)
    return Ket(_amplitudes(int(i)), [2, 2, 2])


def constituent_set() -> ConstituentSet:
    return ConstituentSet(
        tuple(constituent_ket(i) for i in range(N_CONSTITUENTS)),
        tuple(bipartition_label(i) for i in range(N_CONSTITUENTS)),
    )


def mixture_weights(q: float) -> np.ndarray:
    """Weights ``(1-q)/8`` for constituents 0..7 and ``q/2`` for 8, 9."""
    q = float(q)
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q={q} outside [0, 1]")
    return np.array([(1 - q) / 8] * 8 + [q / 2] * 2)


def single_copy_state(q: float) -> DensityMatrix:
    w = mixture_weights(q)
    rho = sum(wi * projector(_amplitudes(i)) for i, wi in enumerate(w))
    return DensityMatrix(rho, [2, 2, 2])


def party_major_permutation(copies: int, parties: int = 3) -> list[int]:
    """Permutation taking copy-major (A1 B1 C1 A2 ...) to party-major (A1 A2 ... B1 ...)."""
    return [c * parties + p for p in range(parties) for c in range(copies)]


def n_copy_state(q: float, n: int) -> DensityMatrix:
    """``rho(q)`` tensored ``n`` times, subsystems in order A1..An B1..Bn C1..Cn."""
    n = int(n)
    if n < 1:
        raise ValueError("need at least one copy")
    if n > MAX_COPIES:
        raise ValueError(f"{n} copies ({3 * n} qubits) exceed the dense-storage limit of {MAX_COPIES}")
    single = single_copy_state(q).entries
    rho = single
    for _ in range(n - 1):
        rho = np.kron(rho, single)
    rho = permute_subsystems(rho, party_major_permutation(n), [2] * (3 * n))
    return DensityMatrix(rho, [2] * (3 * n), check=False)


def constituent_pair(i: int, j: int) -> DensityMatrix:
    """Pure six-qubit state ``|a_i>|a_j>`` in A1 A2 B1 B2 C1 C2 order."""
    _check_index(i)
    _check_index(j)
    psi = np.kron(_amplitudes(int(i)), _amplitudes(int(j)))
    psi = permute_subsystems(psi, party_major_permutation(2), [2] * 6)
    return DensityMatrix(projector(psi), [2] * 6, check=False)


def ghz_state(n: int = 3) -> DensityMatrix:
    v = np.zeros(2**n, dtype=complex)
    v[0] = v[-1] = 1 / _S2
    return DensityMatrix(projector(v), [2] * n)
