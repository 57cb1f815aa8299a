"""Pauli strings: matrices, decompositions, measurement settings.

Coefficients follow the trace convention ``m_w = Tr[H M_w]`` so that
``H = 2**-n * sum_w m_w M_w``. For a unit-trace operator the identity
coefficient is therefore 1.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .linalg import as_array, is_hermitian

SYMBOLS = "IXYZ"

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliString:
    word: str
    weight: float = 1.0

    def __post_init__(self):
        word = self.word.upper()
        if not word or any(c not in SYMBOLS for c in word):
            raise ValueError(f"invalid Pauli word {self.word!r}")
        object.__setattr__(self, "word", word)

    @property
    def n(self) -> int:
        return len(self.word)

    @property
    def is_diagonal(self) -> bool:
        return set(self.word) <= {"I", "Z"}


@dataclass
class MeasurementSetting:
    """Local measurement bases (one of X, Y, Z per qubit) and the words read from them."""

    basis: str
    members: list = field(default_factory=list)

    def covers(self, word: str) -> bool:
        return all(w == "I" or w == b for w, b in zip(word, self.basis))


def _word(p) -> str:
    return p.word if isinstance(p, PauliString) else PauliString(p).word


def materialize(p) -> np.ndarray:
    """Dense matrix of a Pauli word, Kronecker product in word order."""
    return reduce(np.kron, (PAULI_MATRICES[c] for c in _word(p)))


def word_order_key(word: str):
    # diagonal (I/Z) words first, then lexicographic with I < X < Y < Z
    return (not set(word) <= {"I", "Z"}, [SYMBOLS.index(c) for c in word])


def pauli_coefficients(h, tol: float = 1e-10) -> dict:
    """Map word -> ``Tr[h M_word]`` for every coefficient above ``tol``.

    Computed by contracting one qubit at a time, which costs O(4**n * 2**n)
    instead of materializing all 4**n strings.
    """
    arr, dims = as_array(h)
    if any(d != 2 for d in dims):
        raise ValueError("Pauli decomposition needs a qubit register")
    if not is_hermitian(arr):
        raise ValueError("operator is not Hermitian")
    n = len(dims)
    # t[r_1..r_n, c_1..c_n]; Tr[H (x) s_k] = sum H[r, c] prod s_k[c_k, r_k]
    t = np.asarray(arr, dtype=complex).reshape([2] * (2 * n))
    basis = np.stack([PAULI_MATRICES[c] for c in SYMBOLS])  # (4, 2, 2)
    for q in range(n):
        # layout before step q: [s_1..s_q, r_{q+1}..r_n, c_{q+1}..c_n], so the
        # row axis of qubit q sits at q and its column axis at n
        t = np.moveaxis(t, (q, n), (0, 1))
        t = np.einsum("rc...,scr->s...", t, basis)
        t = np.moveaxis(t, 0, q)
    coeffs = t.reshape(-1).real
    out = {}
    for idx in np.flatnonzero(np.abs(coeffs) > tol):
        word = "".join(SYMBOLS[d] for d in np.unravel_index(idx, [4] * n))
        out[word] = float(coeffs[idx])
    return dict(sorted(out.items(), key=lambda kv: word_order_key(kv[0])))


def reconstruct(coeffs: dict, n: int | None = None) -> np.ndarray:
    """Inverse of :func:`pauli_coefficients`."""
    if n is None:
        n = len(next(iter(coeffs)))
    h = np.zeros((2**n, 2**n), dtype=complex)
    for word, m in coeffs.items():
        h += m * materialize(word)
    return h / 2**n


def group_settings(words) -> list:
    """Greedy grouping of words into local measurement settings.

    Every word made of I and Z only is read from the all-Z setting, which is
    placed first. Other words join the first setting whose basis agrees on all
    their non-identity positions, else start a new one. Unset positions of a
    setting basis default to Z.
    """
    words = [_word(w) for w in words]
    if not words:
        return []
    n = len(words[0])
    if any(len(w) != n for w in words):
        raise ValueError("words have different lengths")
    settings = []
    diagonal = [k for k, w in enumerate(words) if set(w) <= {"I", "Z"}]
    if diagonal:
        settings.append(MeasurementSetting("Z" * n, diagonal))
    partial = []  # bases with '?' for positions not yet fixed
    for k, w in enumerate(words):
        if k in diagonal:
            continue
        for s in partial:
            if all(c == "I" or b in ("?", c) for c, b in zip(w, s.basis)):
                s.basis = "".join(b if c == "I" else c for c, b in zip(w, s.basis))
                s.members.append(k)
                break
        else:
            partial.append(MeasurementSetting("".join("?" if c == "I" else c for c in w), [k]))
    for s in partial:
        s.basis = s.basis.replace("?", "Z")
        settings.append(s)
    return settings


def expectation(p, rho) -> float:
    """``Tr[rho M]`` for the Pauli word of ``p`` (the weight is not applied)."""
    word = _word(p)
    arr, dims = as_array(rho)
    if len(dims) != len(word):
        raise ValueError(f"word of length {len(word)} on a {len(dims)}-qubit register")
    return float(np.real(np.trace(arr @ materialize(word))))


def parity_vector(word: str) -> np.ndarray:
    """Eigenvalue of each basis outcome after measuring in the word's setting.

    Tensor product of ``(1, 1)`` for I and ``(1, -1)`` for X, Y or Z, with the
    first symbol as the most significant bit.
    """
    vs = [np.array([1.0, 1.0]) if c == "I" else np.array([1.0, -1.0]) for c in _word(word)]
    return reduce(np.kron, vs)


def all_words(n: int):
    return ("".join(w) for w in itertools.product(SYMBOLS, repeat=n))
