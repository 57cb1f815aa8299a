"""Shot-level simulation of the two-copy witness measurement and of tomography.

The measured state is never prepared directly. Each of the 10 x 10 pairs of
constituents ``|a_i>|a_j>`` is measured in 17 local settings with ``n`` shots
each, and the witness estimate weights the pair results by ``w_i w_j``.

Random streams: one ``SeedSequence(seed)`` is spawned into one child per
``(i, j, k')`` cell, in row-major order. A cell's draws therefore do not
depend on how many other cells are sampled or in which order.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .linalg import DensityMatrix, as_array, fidelity, permute_subsystems, projector
from .pauli import group_settings, parity_vector
from .states import N_CONSTITUENTS, constituent_ket, mixture_weights, party_major_permutation
from .witness import Witness, load_paper_witness

N_SETTINGS = 17
NORMALIZATION = 1 / 64

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.diag([1.0, -1.0j])
# unitaries taking each basis' +1 eigenvector to |0>
ROTATIONS = {"Z": np.eye(2, dtype=complex), "X": _H, "Y": _H @ _SDG}


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing channel on each constituent followed by local dephasing.

    ``rho -> (1 - p) rho + p I/d`` then, on every qubit,
    ``rho -> (1 - g) rho + g Z rho Z``.
    """

    depolarizing: float = 0.0
    dephasing: float = 0.0

    def __post_init__(self):
        for name in ("depolarizing", "dephasing"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} strength {v} outside [0, 1]")

    @property
    def ideal(self) -> bool:
        return self.depolarizing == 0.0 and self.dephasing == 0.0

    def apply(self, rho) -> np.ndarray:
        arr, dims = as_array(rho)
        arr = np.asarray(arr, dtype=complex)
        d = arr.shape[0]
        out = (1 - self.depolarizing) * arr + self.depolarizing * np.eye(d) / d
        if self.dephasing:
            n = len(dims)
            for q in range(n):
                z = reduce(np.kron, [np.diag([1.0, -1.0]) if k == q else np.eye(2) for k in range(n)])
                out = (1 - self.dephasing) * out + self.dephasing * z @ out @ z
        return out

    def to_json(self) -> dict:
        return {"depolarizing": self.depolarizing, "dephasing": self.dephasing}

    @classmethod
    def parse(cls, spec) -> "NoiseModel":
        """Accept ``None``, ``"none"``, a dict or ``"depol=0.05,dephase=0.01"``."""
        if spec is None or spec == "none":
            return cls()
        if isinstance(spec, NoiseModel):
            return spec
        if isinstance(spec, dict):
            return cls(float(spec.get("depolarizing", 0.0)), float(spec.get("dephasing", 0.0)))
        kw = {}
        for part in str(spec).split(","):
            key, _, val = part.partition("=")
            key = key.strip()
            if key in ("depol", "depolarizing"):
                kw["depolarizing"] = float(val)
            elif key in ("dephase", "dephasing"):
                kw["dephasing"] = float(val)
            else:
                raise ValueError(f"unknown noise parameter {key!r}")
        return cls(**kw)


def _basis_word(setting) -> str:
    return setting.basis if hasattr(setting, "basis") else str(setting).upper()


def rotation(setting) -> np.ndarray:
    """Local unitary mapping the setting's eigenbasis onto the computational basis."""
    return reduce(np.kron, [ROTATIONS[c] for c in _basis_word(setting)])


def born_distribution(rho, setting) -> np.ndarray:
    """Outcome probabilities of a local Pauli setting, first qubit most significant."""
    arr, dims = as_array(rho)
    word = _basis_word(setting)
    if len(word) != len(dims):
        raise ValueError(f"setting {word!r} on a {len(dims)}-qubit register")
    arr = np.asarray(arr, dtype=complex)
    if arr.ndim == 1:
        p = np.abs(rotation(word) @ arr) ** 2
    else:
        n = len(word)
        t = arr.reshape([2] * (2 * n))
        # rotate rows and columns one qubit at a time
        for q, c in enumerate(word):
            u = ROTATIONS[c]
            t = np.moveaxis(np.tensordot(u, t, axes=([1], [q])), 0, q)
            t = np.moveaxis(np.tensordot(t, u.conj().T, axes=([n + q], [0])), -1, n + q)
        p = np.real(np.diagonal(t.reshape(2**n, 2**n)))
    p = np.clip(p, 0.0, None)
    return p / p.sum()


# ---------------------------------------------------------------------------
# witness measurement


def witness_settings(w: Witness | None = None) -> list:
    """The local settings reading every Pauli term of the witness (all-Z first)."""
    w = w or load_paper_witness()
    words = list(w.pauli())
    return group_settings(words)


def _pair_distributions(rhos, words) -> np.ndarray:
    """Exact probabilities ``P[i, j, k', l]`` for every constituent pair.

    A six-qubit setting in A1 A2 B1 B2 C1 C2 order splits into one
    three-qubit setting per copy; the joint distribution is the product of
    the two copy distributions, reordered back to party-major outcome bits.
    """
    m = len(rhos)
    out = np.empty((m, m, len(words), 64))
    for k, word in enumerate(words):
        first, second = word[0::2], word[1::2]
        p1 = np.array([born_distribution(r, first) for r in rhos])
        p2 = np.array([born_distribution(r, second) for r in rhos])
        joint = np.einsum("ia,jb->ijab", p1, p2).reshape(m, m, 2, 2, 2, 2, 2, 2)
        # axes (a_A, a_B, a_C, b_A, b_B, b_C) -> (a_A, b_A, a_B, b_B, a_C, b_C)
        out[:, :, k] = joint.transpose(0, 1, 2, 5, 3, 6, 4, 7).reshape(m, m, 64)
    return out


def constituent_states(noise: NoiseModel | None = None) -> list:
    noise = noise or NoiseModel()
    return [noise.apply(projector(constituent_ket(i).amplitudes)) for i in range(N_CONSTITUENTS)]


def exact_probabilities(noise: NoiseModel | None = None, w: Witness | None = None) -> np.ndarray:
    words = [s.basis for s in witness_settings(w)]
    return _pair_distributions(constituent_states(noise), words)


@dataclass
class ShotTable:
    """Relative frequencies ``f[i, j, k', l]`` from ``n`` shots per cell.

    ``n = None`` marks an exact table (frequencies are Born probabilities).
    """

    f: np.ndarray
    n: int | None
    seed: int | None
    setting_words: list
    q: float | None = None
    noise: dict = field(default_factory=dict)

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        if self.f.ndim != 4 or self.f.shape[2] != len(self.setting_words):
            raise ValueError(f"frequency tensor of shape {self.f.shape} does not match the settings")
        if not np.allclose(self.f.sum(axis=-1), 1.0, atol=1e-12):
            raise ValueError("frequency rows must sum to one")

    @property
    def exact(self) -> bool:
        return self.n is None

    def counts(self) -> np.ndarray:
        if self.exact:
            raise ValueError("an exact table has no counts")
        return np.rint(self.f * self.n).astype(np.int64)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "seed": self.seed,
            "q": self.q,
            "noise": self.noise,
            "setting_words": list(self.setting_words),
            "f": self.f.tolist(),
        }

    @classmethod
    def from_json(cls, obj) -> "ShotTable":
        return cls(np.array(obj["f"]), obj.get("n"), obj.get("seed"), list(obj["setting_words"]),
                   obj.get("q"), obj.get("noise") or {})

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path) -> "ShotTable":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def cell_streams(seed, shape) -> list:
    """One independent generator per cell, spawned in row-major cell order."""
    children = np.random.SeedSequence(seed).spawn(int(np.prod(shape)))
    return [np.random.default_rng(c) for c in children]


def sample_shot_table(q: float, noise: NoiseModel | None = None, n: int | None = 50, seed: int = 0,
                      w: Witness | None = None, exact: bool = False) -> ShotTable:
    """Draw ``n`` shots for every constituent pair and setting.

    With ``exact=True`` (or ``n=None``) the frequencies are the Born
    probabilities themselves.
    """
    noise = NoiseModel.parse(noise)
    mixture_weights(q)  # validates q
    settings = witness_settings(w)
    words = [s.basis for s in settings]
    probs = _pair_distributions(constituent_states(noise), words)
    if exact or n is None:
        return ShotTable(probs, None, seed, words, q, noise.to_json())
    n = int(n)
    if n < 1:
        raise ValueError("need at least one shot per cell")
    cells = probs.reshape(-1, probs.shape[-1])
    counts = np.empty(cells.shape, dtype=np.int64)
    for c, rng in enumerate(cell_streams(seed, cells.shape[0])):
        counts[c] = rng.multinomial(n, cells[c])
    return ShotTable(counts.reshape(probs.shape) / n, n, seed, words, q, noise.to_json())


@dataclass
class EstimatorWeights:
    """Weights ``M'[i, j, k', l]`` so that the estimate is ``normalization * f' . M'``.

    Cell ``(i, j, k')`` carries ``w_i w_j sum_k m_k h_k[l]`` over the Pauli
    terms ``k`` read from setting ``k'``.
    """

    M: np.ndarray
    normalization: float
    setting_words: list
    members: list

    @classmethod
    def build(cls, w: Witness | None = None, q: float = 0.06) -> "EstimatorWeights":
        w = w or load_paper_witness()
        coeffs = w.pauli()
        words = list(coeffs)
        settings = group_settings(words)
        per_setting = np.zeros((len(settings), 2 ** len(words[0])))
        for k, s in enumerate(settings):
            for idx in s.members:
                per_setting[k] += coeffs[words[idx]] * parity_vector(words[idx])
        ww = np.outer(mixture_weights(q), mixture_weights(q))
        M = ww[:, :, None, None] * per_setting[None, None]
        return cls(M, 1 / 2 ** len(words[0]), [s.basis for s in settings],
                   [[words[i] for i in s.members] for s in settings])


def _check_shapes(t: ShotTable, weights: EstimatorWeights):
    if t.f.shape != weights.M.shape:
        raise ValueError(f"shot table {t.f.shape} and weights {weights.M.shape} differ in shape")
    if list(t.setting_words) != list(weights.setting_words):
        raise ValueError("shot table and weights use different measurement settings")


def estimate_witness(t: ShotTable, weights: EstimatorWeights) -> float:
    _check_shapes(t, weights)
    return float(weights.normalization * np.sum(t.f * weights.M))


def propagate_variance(t: ShotTable, weights: EstimatorWeights) -> float:
    """``M^T Sigma M`` for the multinomial covariance, without building Sigma.

    ``Sigma M = diag(Sigma) M + zeta`` where ``diag(Sigma) = f (1 - f) / n`` and
    ``zeta_l = -(f_l / n) sum_{l' != l} f_l' M_l'`` collects the negative
    covariances between outcomes of the same cell.
    """
    _check_shapes(t, weights)
    if t.exact:
        return 0.0
    f, M, n = t.f, weights.M * weights.normalization, t.n
    diag = f * (1 - f) / n
    fm = np.sum(f * M, axis=-1, keepdims=True)
    zeta = -(f / n) * (fm - f * M)
    return float(max(np.sum(M * (diag * M + zeta)), 0.0))


def covariance_matrix(t: ShotTable, cells) -> np.ndarray:
    """Dense multinomial covariance over the listed ``(i, j, k')`` cells (for checks)."""
    blocks = []
    for i, j, k in cells:
        f = t.f[i, j, k]
        blocks.append((np.diag(f) - np.outer(f, f)) / t.n)
    size = sum(b.shape[0] for b in blocks)
    out = np.zeros((size, size))
    pos = 0
    for b in blocks:
        out[pos:pos + b.shape[0], pos:pos + b.shape[0]] = b
        pos += b.shape[0]
    return out


def resample_witness(t: ShotTable, weights: EstimatorWeights, runs: int = 1000, seed: int = 0) -> np.ndarray:
    """Re-estimate the witness on ``runs`` multinomial redraws of every cell."""
    if runs < 2:
        raise ValueError("need at least two resampling runs")
    if t.exact:
        raise ValueError("cannot resample an exact table")
    _check_shapes(t, weights)
    rng = np.random.default_rng(seed)
    f = t.f.reshape(-1, t.f.shape[-1])
    M = weights.M.reshape(f.shape)
    out = np.empty(runs)
    for r in range(runs):
        counts = rng.multinomial(t.n, f)
        out[r] = weights.normalization * np.sum(counts * M) / t.n
    return out


def write_histogram_csv(estimates, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["estimate"])
        for e in estimates:
            writer.writerow([repr(float(e))])


# ---------------------------------------------------------------------------
# tomography


def tomography_words(n: int = 3) -> list:
    import itertools

    return ["".join(w) for w in itertools.product("XYZ", repeat=n)]


def _setting_projectors(words) -> np.ndarray:
    """``proj[s, l]`` = projector onto outcome ``l`` of setting ``s``."""
    out = []
    for word in words:
        u = rotation(word)
        # outcome l <-> row l of u: |e_l> = u^dagger |l>
        vecs = u.conj().T
        out.append(np.einsum("al,bl->lab", vecs, vecs.conj()))
    return np.array(out)


@dataclass
class TomographyResult:
    rho: DensityMatrix
    iterations: int
    log_likelihood: float
    converged: bool


def mle_reconstruct(freqs, words, max_iter: int = 5000, tol: float = 1e-10) -> TomographyResult:
    """Iterative maximum-likelihood estimate from per-setting outcome frequencies.

    Fixed point ``rho <- R rho R / Tr[R rho R]`` with
    ``R = sum_{s,l} f_{s,l} / p_{s,l} Pi_{s,l}``, started from the maximally
    mixed state. Zero-frequency outcomes simply drop out of ``R``.
    """
    freqs = np.asarray(freqs, dtype=float)
    proj = _setting_projectors(words)
    d = proj.shape[-1]
    rho = np.eye(d, dtype=complex) / d
    mask = freqs > 0

    def probs(r):
        return np.real(np.einsum("slab,ba->sl", proj, r))

    p = probs(rho)
    ll = float(np.sum(freqs[mask] * np.log(p[mask])))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        ratio = np.where(mask, freqs / np.maximum(p, 1e-300), 0.0)
        R = np.einsum("sl,slab->ab", ratio, proj)
        rho = R @ rho @ R
        rho = (rho + rho.conj().T) / 2
        rho /= np.trace(rho).real
        p = probs(rho)
        new_ll = float(np.sum(freqs[mask] * np.log(np.maximum(p[mask], 1e-300))))
        gain = new_ll - ll
        ll = new_ll
        if gain < tol:
            converged = True
            break
    n = int(np.log2(d))
    return TomographyResult(DensityMatrix(rho, [2] * n), it, ll, converged)


def tomograph_constituent(rho_true, shots: int | None = 200, seed=0, exact: bool = False,
                          max_iter: int = 5000, tol: float = 1e-10) -> DensityMatrix:
    """Simulated 27-setting Pauli tomography plus maximum-likelihood reconstruction."""
    arr, dims = as_array(rho_true)
    words = tomography_words(len(dims))
    probs = np.array([born_distribution(arr, w) for w in words])
    if exact or shots is None:
        # rounding leaves ~1e-33 mass on impossible outcomes; the likelihood
        # would then chase outcomes the state assigns probability zero
        freqs = np.where(probs > 1e-14, probs, 0.0)
        freqs /= freqs.sum(axis=1, keepdims=True)
    else:
        if shots < 1:
            raise ValueError("need at least one shot per setting")
        rng = np.random.default_rng(seed)
        freqs = np.array([rng.multinomial(shots, p) for p in probs]) / shots
    return mle_reconstruct(freqs, words, max_iter, tol).rho


def tomograph_mixture(q: float, shots: int | None = 200, seed=0, noise: NoiseModel | None = None,
                      exact: bool = False, **kw) -> DensityMatrix:
    """Reconstruct each constituent separately and mix with the weights of ``rho(q)``."""
    w = mixture_weights(q)
    states = constituent_states(NoiseModel.parse(noise))
    seeds = np.random.SeedSequence(seed).spawn(len(states))
    rho = np.zeros((8, 8), dtype=complex)
    for wi, s, ss in zip(w, states, seeds):
        rho += wi * np.asarray(tomograph_constituent(s, shots, ss, exact, **kw).entries)
    return DensityMatrix(rho, [2, 2, 2])


def infidelity(rho, sigma) -> float:
    return 1.0 - fidelity(rho, sigma)


def two_copy_from_constituents(rhos, q: float) -> np.ndarray:
    """Two-copy state of a constituent mixture, party-major order."""
    w = mixture_weights(q)
    single = sum(wi * np.asarray(r) for wi, r in zip(w, rhos))
    return permute_subsystems(np.kron(single, single), party_major_permutation(2), [2] * 6)
