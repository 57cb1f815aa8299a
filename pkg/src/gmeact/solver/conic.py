"""Small dense semidefinite programs over Hermitian matrix blocks.

A :class:`ConicProgram` has named Hermitian variable blocks ``X_b`` and asks
to

    minimize    sum_b Re Tr[C_b X_b]
    subject to  sum_b Re Tr[A_eb X_b] = r_e                 (equalities)
                F_c + sum_t coeff_t * T_t(X_{b_t}) >= 0     (PSD cones)

where ``T_t`` is the identity or a partial transpose on a subset of the
block's subsystems. Every such map is an isometry of the real
Hilbert-Schmidt space, which keeps the linear step cheap.

The solver is an operator-splitting method (ADMM with relaxation, in the
form used by OSQP/COSMO): the equality-constrained quadratic step is solved
matrix-free by conjugate gradients and the cone step is an eigenvalue clamp.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..linalg import partial_transpose

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class Term:
    block: str
    coeff: float = 1.0
    transpose: tuple = ()


@dataclass
class ConeConstraint:
    name: str
    terms: list
    constant: np.ndarray | None = None


@dataclass
class EqualityConstraint:
    coeffs: dict
    rhs: float


@dataclass
class ConicProgram:
    blocks: dict  # name -> subsystem dims
    objective: dict = field(default_factory=dict)
    equalities: list = field(default_factory=list)
    cones: list = field(default_factory=list)

    def block_dim(self, name) -> int:
        return int(np.prod(self.blocks[name]))

    def cone_dim(self, cone: ConeConstraint) -> int:
        return self.block_dim(cone.terms[0].block)

    def validate(self):
        for name, dims in self.blocks.items():
            if not dims or any(int(d) < 1 for d in dims):
                raise ValueError(f"block {name!r} has invalid dims {dims}")
        for name, c in self.objective.items():
            _check_matrix(c, self.block_dim(name), f"objective[{name}]")
        for e in self.equalities:
            for name, a in e.coeffs.items():
                _check_matrix(a, self.block_dim(name), "equality coefficient")
        for cone in self.cones:
            if not cone.terms:
                raise ValueError(f"cone {cone.name!r} has no terms")
            for t in cone.terms:
                if t.block not in self.blocks:
                    raise ValueError(f"cone {cone.name!r} refers to unknown block {t.block!r}")
            d = self.cone_dim(cone)
            for t in cone.terms:
                if self.block_dim(t.block) != d:
                    raise ValueError(f"cone {cone.name!r} mixes block sizes")
                if any(not 0 <= s < len(self.blocks[t.block]) for s in t.transpose):
                    raise ValueError(f"cone {cone.name!r}: transpose subset out of range")
            if cone.constant is not None:
                _check_matrix(cone.constant, d, f"cone {cone.name!r} constant")

    def apply_term(self, t: Term, x):
        y = x if not t.transpose else partial_transpose(x, t.transpose, self.blocks[t.block])
        return t.coeff * y

    def cone_value(self, cone: ConeConstraint, blocks: dict):
        """``F_c + sum_t coeff_t T_t(X)`` for the given block values."""
        out = np.zeros((self.cone_dim(cone),) * 2, dtype=complex)
        if cone.constant is not None:
            out += cone.constant
        for t in cone.terms:
            out += self.apply_term(t, blocks[t.block])
        return out

    def objective_value(self, blocks: dict) -> float:
        return float(sum(np.real(np.vdot(c, blocks[b])) for b, c in self.objective.items()))


def _check_matrix(m, d, what):
    m = np.asarray(m)
    if m.shape != (d, d):
        raise ValueError(f"{what} has shape {m.shape}, expected {(d, d)}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-10:
        raise ValueError(f"{what} is not Hermitian")


@dataclass
class SolveReport:
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    gap: float
    status: str
    dual_objective: float = float("nan")
    seconds: float = 0.0
    history: list = field(default_factory=list, repr=False)
    duals: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return {k: v for k, v in vars(self).items() if k not in ("history", "duals")}


def min_eig_projection(h) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues clamped to 0)."""
    h = np.asarray(h)
    h = (h + np.swapaxes(h.conj(), -1, -2)) / 2
    lam, v = np.linalg.eigh(h)
    return (v * np.clip(lam, 0.0, None)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def _herm(m):
    return (m + m.conj().T) / 2


class _Operator:
    """The stacked constraint map ``L`` and its adjoint on flat vectors.

    Block values are concatenated row-major into one complex vector; cone
    values likewise. Every term is a gather ``x[idx]`` with a precomputed
    index (identity or partial-transpose permutation), so its adjoint is the
    matching scatter.
    """

    def __init__(self, prog: ConicProgram):
        self.prog = prog
        self.names = list(prog.blocks)
        self.dims = {b: prog.block_dim(b) for b in self.names}
        self.offsets, n = {}, 0
        for b in self.names:
            self.offsets[b] = n
            n += self.dims[b] ** 2
        self.n = n
        self.a_eq = np.zeros((len(prog.equalities), n), dtype=complex)
        for i, e in enumerate(prog.equalities):
            for b, a in e.coeffs.items():
                o = self.offsets[b]
                self.a_eq[i, o:o + self.dims[b] ** 2] = np.asarray(a, dtype=complex).ravel()
        self.cones, m = [], 0
        for cone in prog.cones:
            d = prog.cone_dim(cone)
            terms = []
            for t in cone.terms:
                idx = np.arange(d * d)
                if t.transpose:
                    idx = partial_transpose(idx.reshape(d, d), t.transpose, prog.blocks[t.block]).ravel()
                terms.append((self.offsets[t.block] + idx, float(t.coeff)))
            self.cones.append((slice(m, m + d * d), d, terms))
            m += d * d
        self.m = m
        # cones of equal size are projected together
        self.groups = {}
        for k, (sl, d, _) in enumerate(self.cones):
            self.groups.setdefault(d, []).append(k)

    def pack(self, blocks: dict) -> np.ndarray:
        x = np.zeros(self.n, dtype=complex)
        for b, v in blocks.items():
            o = self.offsets[b]
            x[o:o + self.dims[b] ** 2] = np.asarray(v, dtype=complex).ravel()
        return x

    def unpack(self, x) -> dict:
        return {b: x[o:o + self.dims[b] ** 2].reshape(self.dims[b], self.dims[b]) for b, o in self.offsets.items()}

    def cone_matrices(self, z) -> list:
        return [z[sl].reshape(d, d) for sl, d, _ in self.cones]

    def forward(self, x):
        eq = (self.a_eq.conj() @ x).real
        out = np.empty(self.m, dtype=complex)
        for sl, _, terms in self.cones:
            v = terms[0][1] * x[terms[0][0]]
            for idx, c in terms[1:]:
                v = v + c * x[idx]
            out[sl] = v
        return eq, out

    def adjoint(self, y_eq, y_cone):
        out = self.a_eq.T @ np.asarray(y_eq, dtype=complex)
        for sl, _, terms in self.cones:
            seg = y_cone[sl]
            for idx, c in terms:
                out[idx] += c * seg
        return out

    def project(self, z):
        """Project every cone segment of ``z`` onto the PSD cone."""
        out = np.empty_like(z)
        for d, ks in self.groups.items():
            stack = np.stack([z[self.cones[k][0]].reshape(d, d) for k in ks])
            proj = min_eig_projection(stack)
            for k, p in zip(ks, proj):
                out[self.cones[k][0]] = p.ravel()
        return out


def _inner(x, y) -> float:
    return float(np.real(np.vdot(x, y)))


def _norm(*parts) -> float:
    return float(np.sqrt(sum(np.sum(np.abs(p) ** 2) for p in parts)))


def _cg(apply, rhs, x0, tol, max_iter=200):
    x = x0.copy()
    r = rhs - apply(x)
    p = r.copy()
    rr = _inner(r, r)
    target = (tol * max(_norm(rhs), 1e-300)) ** 2
    for _ in range(max_iter):
        if rr <= target:
            break
        ap = apply(p)
        alpha = rr / _inner(p, ap)
        x += alpha * p
        r -= alpha * ap
        rr_new = _inner(r, r)
        p = r + (rr_new / rr) * p
        rr = rr_new
    return x


def solve_conic(
    prog: ConicProgram,
    tol: float = 1e-7,
    max_iter: int = 50_000,
    seed: int = 0,
    *,
    rho: float = 0.1,
    sigma: float = 1e-6,
    alpha: float = 1.6,
    eq_scale: float = 1e3,
    adapt_every: int = 50,
    check_every: int = 10,
    init: str = "zeros",
    verbose: bool = False,
):
    """Solve ``prog``; returns ``(block_values, SolveReport)``.

    Termination uses relative primal/dual residuals and the duality gap, all
    below ``tol``. Exhausting ``max_iter`` returns the last iterate with
    status ``max_iter``. A primal infeasibility certificate gives status
    ``infeasible``.

    The iteration is deterministic. ``seed`` only matters with
    ``init="random"``, which starts from a small random perturbation.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    prog.validate()
    op = _Operator(prog)
    t0 = time.perf_counter()

    c = op.pack({b: m for b, m in prog.objective.items()})
    eq_rhs = np.array([e.rhs for e in prog.equalities], dtype=float)
    consts = np.zeros(op.m, dtype=complex)
    for (sl, _, _), k in zip(op.cones, prog.cones):
        if k.constant is not None:
            consts[sl] = np.asarray(k.constant, dtype=complex).ravel()

    x = np.zeros(op.n, dtype=complex)
    if init == "random":
        rng = np.random.default_rng(seed)
        blocks = {}
        for b, d in op.dims.items():
            g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            blocks[b] = 1e-3 * _herm(g)
        x = op.pack(blocks)
    elif init != "zeros":
        raise ValueError(f"unknown init {init!r}")
    z_eq, z_cone = op.forward(x)
    y_eq = np.zeros(len(eq_rhs))
    y_cone = np.zeros(op.m, dtype=complex)

    norm_c = _norm(c)
    norm_b = _norm(eq_rhs, consts)

    def system(v):
        eq, cones = op.forward(v)
        return sigma * v + op.adjoint(rho * eq_scale * eq, rho * cones)

    status = MAX_ITER
    it = 0
    r_prim = r_dual = gap = float("inf")
    obj = dual_obj = float("nan")
    history = []
    for it in range(1, max_iter + 1):
        back = op.adjoint(rho * eq_scale * z_eq - y_eq, rho * z_cone - y_cone)
        x_t = _cg(system, sigma * x - c + back, x, tol=1e-12)
        zt_eq, zt_cone = op.forward(x_t)

        x_new = alpha * x_t + (1 - alpha) * x
        zr_eq = alpha * zt_eq + (1 - alpha) * z_eq
        zr_cone = alpha * zt_cone + (1 - alpha) * z_cone

        z_eq_new = eq_rhs.copy()
        z_cone_new = op.project(zr_cone + y_cone / rho + consts) - consts

        dy_eq = rho * eq_scale * (zr_eq - z_eq_new)
        dy_cone = rho * (zr_cone - z_cone_new)
        y_eq = y_eq + dy_eq
        y_cone = y_cone + dy_cone
        x, z_eq, z_cone = x_new, z_eq_new, z_cone_new

        if it % check_every and it != max_iter:
            continue

        ax_eq, ax_cone = op.forward(x)
        r_prim = _norm(ax_eq - z_eq, ax_cone - z_cone)
        lty = op.adjoint(y_eq, y_cone)
        r_dual = _norm(lty + c)
        obj = _inner(c, x)
        # dual value: -sum_e y_e r_e + sum_c <y_c, F_c> with y_c pushed into -PSD
        y_feas = -op.project(-y_cone)
        dual_obj = -float(np.dot(y_eq, eq_rhs)) + _inner(y_feas, consts)
        gap = abs(obj - dual_obj)
        scale_p = 1.0 + max(_norm(ax_eq, ax_cone), _norm(z_eq, z_cone), norm_b)
        scale_d = 1.0 + max(norm_c, _norm(lty))
        history.append((it, r_prim, r_dual, gap, obj))
        if verbose and it % 500 == 0:
            log.info("it %d  obj %.10g  rp %.2e  rd %.2e  gap %.2e  rho %.2e", it, obj, r_prim, r_dual, gap, rho)

        if r_prim <= tol * scale_p and r_dual <= tol * scale_d and gap <= tol * (1.0 + abs(obj)):
            status = OPTIMAL
            break

        if _primal_infeasible(op, dy_eq, dy_cone, eq_rhs, consts):
            status = INFEASIBLE
            break

        if it % adapt_every == 0:
            ratio = np.sqrt((r_prim / scale_p) / max(r_dual / scale_d, 1e-300))
            if ratio > 5 or ratio < 0.2:
                # y is unscaled, so only the penalty changes
                rho = float(np.clip(rho * ratio, 1e-6, 1e6))

    values = {b: _herm(v) for b, v in op.unpack(x).items()}
    report = SolveReport(
        objective=float(obj if np.isfinite(obj) else prog.objective_value(values)),
        iterations=it,
        primal_residual=float(r_prim),
        dual_residual=float(r_dual),
        gap=float(gap),
        status=status,
        dual_objective=float(dual_obj),
        seconds=time.perf_counter() - t0,
        history=history,
        duals={
            "equalities": y_eq.copy(),
            "cones": {k.name: _herm(y) for k, y in zip(prog.cones, op.cone_matrices(y_cone))},
        },
    )
    return values, report


def _primal_infeasible(op, dy_eq, dy_cone, eq_rhs, consts) -> bool:
    norm = _norm(dy_eq, dy_cone)
    if norm < 1e-12:
        return False
    eps = 1e-2 * norm
    if _norm(op.adjoint(dy_eq, dy_cone)) > eps * 1e-2:
        return False
    # support function of the constraint set must be finite and negative
    for d in op.cone_matrices(dy_cone):
        if d.size and np.linalg.eigvalsh(_herm(d))[-1] > eps:
            return False
    support = float(np.dot(dy_eq, eq_rhs)) - _inner(dy_cone, consts)
    return support < -eps
