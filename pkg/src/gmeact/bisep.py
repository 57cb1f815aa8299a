"""Biseparability certification of three-qubit states by mixture subtraction.

Each iteration looks for pure product states (one per reference constituent,
product across that constituent's bipartition) that overlap strongly with
the current remainder, mixes them into a biseparable ``eta`` and removes as
much ``eta`` as lowers the purity of the renormalized remainder. Once the
remainder's purity drops to 1/7 it lies in the separable ball around the
maximally mixed state, so the input is a convex combination of biseparable
states.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .linalg import DensityMatrix, Ket, as_array, min_eigenvalue, permute_subsystems, projector, purity
from .states import A_BC, B_AC, ConstituentSet, constituent_set

log = logging.getLogger(__name__)

BISEPARABLE = "biseparable"
INCONCLUSIVE = "inconclusive"

PROPORTIONAL = "proportional"
LP_VERTEX = "lp_vertex"

# which qubit stands alone on each side of the cut
SINGLE_PARTY = {A_BC: 0, B_AC: 1, "C|AB": 2}

_GOLDEN = (np.sqrt(5.0) - 1) / 2


@dataclass
class CertifierConfig:
    b: float = 1e-3
    j_max: int = 1000
    purity_threshold: float = 1 / 7
    seesaw_iters: int = 200
    seesaw_tol: float = 1e-12
    weight_strategy: str = PROPORTIONAL
    restarts: int = 8
    stall_tol: float = 1e-10
    stall_patience: int = 5
    eps_max_tol: float = 1e-10
    eps_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.b < 1:
            raise ValueError("bias b must lie in (0, 1)")
        if self.weight_strategy not in (PROPORTIONAL, LP_VERTEX):
            raise ValueError(f"unknown weight strategy {self.weight_strategy!r}")
        if self.j_max < 1:
            raise ValueError("j_max must be positive")


class Mixture(NamedTuple):
    eta: np.ndarray
    weights: np.ndarray
    kets: list
    overlaps: np.ndarray


class SubtractResult(NamedTuple):
    rho: np.ndarray
    epsilon: float
    epsilon_max: float
    stalled: bool


@dataclass
class IterationRecord:
    purity: float
    epsilon: float
    weights: np.ndarray
    eta: np.ndarray = field(repr=False)
    rho: np.ndarray = field(repr=False)


@dataclass
class SubtractionTrace:
    verdict: str
    records: list
    initial_purity: float
    final_purity: float
    strategy: str
    reason: str = ""
    final_rho: np.ndarray | None = field(default=None, repr=False)

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def purities(self) -> list:
        return [self.initial_purity] + [r.purity for r in self.records]

    def decomposition(self):
        """Weights ``c_j`` and mixtures so that ``rho_0 = sum_j c_j eta_j + c_rem rho_final``."""
        weights, remaining = [], 1.0
        for r in self.records:
            weights.append(remaining * r.epsilon)
            remaining *= 1.0 - r.epsilon
        return weights, [r.eta for r in self.records], remaining

    def to_json(self, include_matrices: bool = False) -> dict:
        out = {
            "verdict": self.verdict,
            "reason": self.reason,
            "strategy": self.strategy,
            "iterations": self.iterations,
            "initial_purity": self.initial_purity,
            "final_purity": self.final_purity,
            "purity": self.purities,
            "epsilon": [r.epsilon for r in self.records],
            "weights": [r.weights.tolist() for r in self.records],
        }
        if include_matrices:
            from .linalg import matrix_to_json

            out["eta"] = [matrix_to_json(r.eta, [2, 2, 2]) for r in self.records]
        return out

    def dump(self, path, **kwargs):
        with open(path, "w") as fh:
            json.dump(self.to_json(**kwargs), fh)


def _to_front(rho, single):
    """Operator with the lone qubit first, reshaped to (2, 4, 2, 4)."""
    order = [single] + [q for q in range(3) if q != single]
    return permute_subsystems(rho, order, [2, 2, 2]).reshape(2, 4, 2, 4), order


def _top_vectors(m):
    """Top eigenvector and eigenvalue of each Hermitian matrix in a stack."""
    lam, v = np.linalg.eigh((m + np.conj(np.swapaxes(m, -1, -2))) / 2)
    return v[..., -1], lam[..., -1]


def _split(ket, single):
    """Best product approximation ``alpha (x) beta`` of a three-qubit ket."""
    order = [single] + [q for q in range(3) if q != single]
    psi = permute_subsystems(np.asarray(ket, dtype=complex), order, [2, 2, 2]).reshape(2, 4)
    u, _, vh = np.linalg.svd(psi)
    return u[:, 0], vh[0]


def _seesaw(r4, betas, iters, tol):
    """Alternating top-eigenvector updates on a stack of problems.

    ``r4`` has shape ``(N, 2, 4, 2, 4)`` (or a single ``(2, 4, 2, 4)`` operator
    shared by all starts) and ``betas`` shape ``(N, 4)``. Returns
    ``(alpha, beta, overlap, history)`` with one row per start; the history
    of each start is non-decreasing.
    """
    betas = np.array(np.atleast_2d(betas), dtype=complex)
    n = len(betas)
    r4 = np.broadcast_to(r4, (n, 2, 4, 2, 4))
    history = []
    prev = np.full(n, -np.inf)
    active = np.ones(n, dtype=bool)
    alphas = np.zeros((n, 2), dtype=complex)
    vals = prev.copy()
    for _ in range(iters):
        idx = np.flatnonzero(active)
        b, r = betas[idx], r4[idx]
        alpha, _ = _top_vectors(np.einsum("narbs,nr,ns->nab", r, b.conj(), b))
        beta, val = _top_vectors(np.einsum("narbs,na,nb->nrs", r, alpha.conj(), alpha))
        alphas[idx], betas[idx], vals[idx] = alpha, beta, val
        history.append(vals.copy())
        active[idx] = val - prev[idx] >= tol
        prev[idx] = val
        if not active.any():
            break
    return alphas, betas, vals, np.array(history)


def _assemble(alpha, beta, order):
    psi = np.kron(alpha, beta)
    return permute_subsystems(psi, list(np.argsort(order)), [2, 2, 2])


def _random_betas(rng, count):
    g = rng.normal(size=(count, 4)) + 1j * rng.normal(size=(count, 4))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _best_products(ops, bipartitions, seed_kets, cfg, rng):
    """Best product state for each operator, all seesaws run as one batch.

    Each problem starts from the product part of its seed ket (if any) and
    from ``cfg.restarts`` Haar-random product states; the best local optimum
    wins, ties broken by start order.
    """
    r4s, betas, owner, orders = [], [], [], []
    for c, (op, label, seed) in enumerate(zip(ops, bipartitions, seed_kets)):
        single = SINGLE_PARTY[label]
        r4, order = _to_front(op, single)
        orders.append(order)
        starts = [] if seed is None else [_split(seed, single)[1]]
        starts.extend(_random_betas(rng, cfg.restarts))
        r4s.extend([r4] * len(starts))
        betas.extend(starts)
        owner.extend([c] * len(starts))
    alphas, betas, vals, _ = _seesaw(np.array(r4s), np.array(betas), cfg.seesaw_iters, cfg.seesaw_tol)
    owner = np.array(owner)
    out = []
    for c, order in enumerate(orders):
        rows = np.flatnonzero(owner == c)
        best = rows[int(np.argmax(vals[rows]))]
        psi = _assemble(alphas[best], betas[best], order)
        out.append((psi / np.linalg.norm(psi), float(vals[best])))
    return out


def max_overlap_product(rho, bipartition: str, seed_ket=None, cfg: CertifierConfig | None = None, rng=None,
                        return_overlap: bool = False):
    """Pure product state across ``bipartition`` locally maximizing ``<psi|rho|psi>``.

    The seesaw starts from the product part of ``seed_ket`` and from
    ``cfg.restarts`` Haar-random product states; the best local optimum wins.
    """
    cfg = cfg or CertifierConfig()
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    arr = np.asarray(as_array(rho)[0], dtype=complex)
    seed = None if seed_ket is None else np.asarray(getattr(seed_ket, "amplitudes", seed_ket))
    psi, val = _best_products([arr], [bipartition], [seed], cfg, rng)[0]
    ket = Ket(psi, [2, 2, 2])
    return (ket, val) if return_overlap else ket


def find_mixture(rho, constituents: ConstituentSet | None = None, cfg: CertifierConfig | None = None, rng=None) -> Mixture:
    """Biseparable mixture of product states steered toward the reference kets.

    Only constituents labelled A|BC or B|AC take part; for each, the
    remainder is biased toward the constituent before the product search.
    """
    cfg = cfg or CertifierConfig()
    constituents = constituents or constituent_set()
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    arr = np.asarray(as_array(rho)[0], dtype=complex)
    ops, labels, seeds = [], [], []
    for ket, label in zip(constituents.kets, constituents.labels):
        if label not in (A_BC, B_AC):
            continue
        a = np.asarray(ket.amplitudes)
        ops.append(cfg.b * projector(a) + (1 - cfg.b) * arr)
        labels.append(label)
        seeds.append(a)
    kets = [psi for psi, _ in _best_products(ops, labels, seeds, cfg, rng)]
    overlaps = np.array([float(np.real(np.vdot(psi, arr @ psi))) for psi in kets])
    if cfg.weight_strategy == PROPORTIONAL:
        p = overlaps / overlaps.sum()
    else:
        p = np.zeros_like(overlaps)
        p[int(np.argmax(overlaps))] = 1.0
    eta = sum(pi * projector(k) for pi, k in zip(p, kets))
    return Mixture(eta, p, kets, overlaps)


def normalized_purity(rho, eta, eps) -> float:
    rem = rho - eps * eta
    return float(np.sum(np.abs(rem) ** 2) / np.trace(rem).real ** 2)


def _golden_min(f, lo, hi, tol):
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = f(d)
    return (lo + hi) / 2


def subtract(rho, eta, cfg: CertifierConfig | None = None) -> SubtractResult:
    """Remove ``eps * eta`` from ``rho`` minimizing the renormalized purity.

    ``eps`` ranges over ``[0, eps_max]`` with ``eps_max`` the largest weight
    keeping the remainder PSD (bisection). The purity of the renormalized
    remainder is unimodal in ``eps``, so golden-section search applies.
    """
    cfg = cfg or CertifierConfig()
    r = np.asarray(as_array(rho)[0], dtype=complex)
    e = np.asarray(as_array(eta)[0], dtype=complex)
    tr_r = np.trace(r).real
    tr_e = np.trace(e).real
    lo, hi = 0.0, tr_r / tr_e
    if min_eigenvalue(r - hi * e) >= 0:
        lo = hi
    while hi - lo > cfg.eps_max_tol:
        mid = (lo + hi) / 2
        if min_eigenvalue(r - mid * e) >= 0:
            lo = mid
        else:
            hi = mid
    eps_max = lo
    # a vanishing remainder means rho was (numerically) eta itself
    if eps_max <= cfg.eps_max_tol or tr_r - eps_max * tr_e <= 1e-9 * tr_r:
        return SubtractResult(r / tr_r, 0.0, eps_max, True)
    eps = _golden_min(lambda x: normalized_purity(r, e, x), 0.0, eps_max, cfg.eps_tol)
    if normalized_purity(r, e, eps) > normalized_purity(r, e, 0.0):
        eps = 0.0
    rem = r - eps * e
    rem = rem / np.trace(rem).real
    return SubtractResult((rem + rem.conj().T) / 2, float(eps), float(eps_max), eps == 0.0)


def certify(rho0, cfg: CertifierConfig | None = None, constituents: ConstituentSet | None = None) -> SubtractionTrace:
    """Try to prove ``rho0`` biseparable; the verdict is never "GME"."""
    cfg = cfg or CertifierConfig()
    if isinstance(rho0, DensityMatrix):
        rho = np.array(rho0.entries)
    else:
        rho = np.array(DensityMatrix(rho0, [2, 2, 2]).entries)
    if rho.shape != (8, 8):
        raise ValueError("certify expects a three-qubit density matrix")
    rng = np.random.default_rng(cfg.seed)
    constituents = constituents or constituent_set()
    pur = purity(rho)
    start = pur
    records = []
    stalls = 0
    j = 0
    reason = ""
    while pur > cfg.purity_threshold and j < cfg.j_max:
        j += 1
        mix = find_mixture(rho, constituents, cfg, rng)
        res = subtract(rho, mix.eta, cfg)
        new_pur = purity(res.rho)
        if res.stalled or pur - new_pur < cfg.stall_tol:
            stalls += 1
        else:
            stalls = 0
        if new_pur < pur:
            records.append(IterationRecord(new_pur, res.epsilon, mix.weights, mix.eta, res.rho))
            rho, pur = res.rho, new_pur
        if stalls >= cfg.stall_patience:
            reason = "stalled"
            break
    if pur <= cfg.purity_threshold + 1e-12:
        verdict = BISEPARABLE
        reason = "remainder inside the separable purity ball"
    else:
        verdict = INCONCLUSIVE
        reason = reason or "iteration limit reached"
    log.debug("certify: %s after %d iterations, purity %.6f", verdict, j, pur)
    return SubtractionTrace(verdict, records, start, pur, cfg.weight_strategy, reason, rho)
