"""Dense linear algebra on qubit registers.

Basis labels are big-endian: subsystem 0 is the most significant bit of the
computational-basis index, so ``|b0 b1 ... b_{n-1}>`` has index
``int("b0b1...", 2)``.

Every function accepts either the :class:`Ket` / :class:`DensityMatrix`
wrappers or plain numpy arrays. When a bare array is passed and ``dims`` is
omitted the register is assumed to consist of qubits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import get_tolerances

__all__ = [
    "Ket",
    "DensityMatrix",
    "qubit_dims",
    "as_array",
    "tensor",
    "permute_subsystems",
    "partial_transpose",
    "eig_hermitian",
    "is_hermitian",
    "min_eigenvalue",
    "projector",
    "purity",
    "fidelity",
    "hs_inner",
    "matrix_to_json",
    "matrix_from_json",
    "ket_to_json",
    "ket_from_json",
]


def qubit_dims(d: int) -> list[int]:
    n = int(round(math.log2(d)))
    if 2**n != d:
        raise ValueError(f"dimension {d} is not a power of two; pass dims explicitly")
    return [2] * n


def _check_dims(d, dims):
    dims = [int(x) for x in dims]
    if int(np.prod(dims)) != d:
        raise ValueError(f"dims {dims} do not multiply to {d}")
    return dims


@dataclass(frozen=True, eq=False)
class Ket:
    """Normalized state vector with its subsystem dimensions."""

    amplitudes: np.ndarray
    dims: list = field(default=None)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        dims = qubit_dims(amps.size) if self.dims is None else _check_dims(amps.size, self.dims)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > get_tolerances().norm:
            raise ValueError(f"ket norm {norm!r} differs from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def dm(self) -> "DensityMatrix":
        return DensityMatrix(projector(self.amplitudes), self.dims)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian positive semidefinite matrix on a tensor-product register.

    ``normalized=False`` skips the unit-trace check, which is needed for
    intermediate operators such as unnormalized remainders.
    ``check=False`` skips validation altogether.
    """

    entries: np.ndarray
    dims: list = field(default=None)
    normalized: bool = True
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        dims = qubit_dims(m.shape[0]) if self.dims is None else _check_dims(m.shape[0], self.dims)
        if self.check:
            tol = get_tolerances()
            if not is_hermitian(m, tol.hermitian):
                raise ValueError("density matrix is not Hermitian")
            if self.normalized and abs(np.trace(m).real - 1.0) > max(tol.trace, 1e-12):
                raise ValueError(f"trace {np.trace(m).real!r} differs from 1")
            lam = np.linalg.eigvalsh(m)[0]
            if lam < -tol.psd:
                raise ValueError(f"minimum eigenvalue {lam:.3e} is negative")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def as_array(x, dims=None):
    """Return ``(array, dims)`` for a wrapper object or a bare array."""
    if isinstance(x, Ket):
        return x.amplitudes, list(x.dims)
    if isinstance(x, DensityMatrix):
        return x.entries, list(x.dims)
    a = np.asarray(x)
    d = a.shape[0]
    return a, (qubit_dims(d) if dims is None else _check_dims(d, dims))


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def tensor(a, b):
    """Kronecker product that keeps track of subsystem dimensions.

    Two kets give a :class:`Ket`, two density matrices a
    :class:`DensityMatrix`; bare arrays give a bare array.
    """
    if isinstance(a, Ket) and isinstance(b, Ket):
        return Ket(np.kron(a.amplitudes, b.amplitudes), a.dims + b.dims)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(
            np.kron(a.entries, b.entries),
            a.dims + b.dims,
            normalized=a.normalized and b.normalized,
            check=False,
        )
    if isinstance(a, (Ket, DensityMatrix)) or isinstance(b, (Ket, DensityMatrix)):
        raise TypeError("tensor() operands must be of the same kind")
    return np.kron(np.asarray(a), np.asarray(b))


def _validate_perm(perm, n):
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of range({n})")
    return perm


def permute_subsystems(rho, perm, dims=None):
    """Reorder tensor factors.

    Position ``p`` of the output holds the subsystem ``perm[p]`` of the input
    (numpy ``transpose`` convention). Works for kets (1-D) and operators.
    """
    arr, dims = as_array(rho, dims)
    n = len(dims)
    perm = _validate_perm(perm, n)
    new_dims = [dims[p] for p in perm]
    if arr.ndim == 1:
        out = arr.reshape(dims).transpose(perm).reshape(-1)
    else:
        axes = perm + [p + n for p in perm]
        out = arr.reshape(dims + dims).transpose(axes).reshape(arr.shape)
    if isinstance(rho, Ket):
        return Ket(out, new_dims)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(out, new_dims, normalized=rho.normalized, check=False)
    return out


def partial_transpose(rho, subset, dims=None) -> np.ndarray:
    """Transpose the subsystems listed in ``subset``; returns a bare array."""
    arr, dims = as_array(rho, dims)
    n = len(dims)
    subset = sorted(set(int(s) for s in subset))
    if any(s < 0 or s >= n for s in subset):
        raise ValueError(f"subset {subset} out of range for {n} subsystems")
    if not subset:
        return np.array(arr)
    axes = list(range(2 * n))
    for s in subset:
        axes[s], axes[s + n] = axes[s + n], axes[s]
    return arr.reshape(dims + dims).transpose(axes).reshape(arr.shape)


def is_hermitian(h, tol=None) -> bool:
    h = np.asarray(h)
    tol = get_tolerances().hermitian if tol is None else tol
    return h.ndim == 2 and h.shape[0] == h.shape[1] and bool(np.max(np.abs(h - h.conj().T), initial=0.0) <= tol)


def eig_hermitian(h, tol=None):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns)."""
    h = as_array(h)[0] if isinstance(h, DensityMatrix) else np.asarray(h)
    if not is_hermitian(h, tol):
        raise ValueError("matrix is not Hermitian")
    return np.linalg.eigh((h + h.conj().T) / 2)


def min_eigenvalue(h) -> float:
    h = np.asarray(h)
    return float(np.linalg.eigvalsh((h + h.conj().T) / 2)[0])


def purity(rho) -> float:
    m = as_array(rho)[0]
    # Tr[rho^2] = sum |rho_ij|^2 for Hermitian rho
    return float(np.sum(np.abs(m) ** 2))


def hs_inner(a, b) -> float:
    """Hilbert-Schmidt inner product Tr[a^dagger b], real part."""
    a = as_array(a)[0]
    b = as_array(b)[0]
    return float(np.real(np.vdot(a, b)))


def _psd_sqrt(m):
    lam, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(lam, 0.0, None))) @ v.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``."""
    r = as_array(rho)[0]
    s = as_array(sigma)[0]
    psd_tol = max(get_tolerances().psd, 1e-9)
    for m, name in ((r, "rho"), (s, "sigma")):
        if not is_hermitian(m, 1e-9):
            raise ValueError(f"{name} is not Hermitian")
        if min_eigenvalue(m) < -psd_tol:
            raise ValueError(f"{name} is not positive semidefinite")
    sr = _psd_sqrt(r)
    lam = np.linalg.eigvalsh(sr @ s @ sr)
    f = float(np.sum(np.sqrt(np.clip(lam, 0.0, None))) ** 2)
    return min(max(f, 0.0), 1.0)


# JSON matrix format: {"dims": [...], "re": [...], "im": [...]} row-major.

def matrix_to_json(m, dims=None) -> dict:
    arr, dims = as_array(m, dims)
    arr = np.asarray(arr, dtype=complex)
    return {"dims": list(dims), "re": arr.real.ravel().tolist(), "im": arr.imag.ravel().tolist()}


def matrix_from_json(obj) -> np.ndarray:
    dims = obj["dims"]
    d = int(np.prod(dims))
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    if re.size != d * d or im.size != d * d:
        raise ValueError(f"matrix payload does not match dims {dims}")
    return (re + 1j * im).reshape(d, d)


def ket_to_json(k) -> dict:
    arr, dims = as_array(k)
    return {"dims": list(dims), "amps_re": arr.real.tolist(), "amps_im": arr.imag.tolist()}


def ket_from_json(obj) -> Ket:
    amps = np.asarray(obj["amps_re"], dtype=float) + 1j * np.asarray(obj["amps_im"], dtype=float)
    return Ket(amps, obj["dims"])
