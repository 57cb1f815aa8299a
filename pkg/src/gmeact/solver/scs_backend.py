"""Child-process backend that solves an adapter-protocol program with SCS.

Run as ``python -m gmeact.solver.scs_backend`` with the request on stdin.
Complex Hermitian cones are lowered to the real symmetric embedding
``[[Re H, -Im H], [Im H, Re H]]``.
"""
from __future__ import annotations

import json
import sys

import numpy as np
import scipy.sparse as sp

from ..linalg import partial_transpose
from .adapter import program_from_json, solution_to_json
from .conic import INFEASIBLE, MAX_ITER, OPTIMAL, ConicProgram, SolveReport


def _hermitian_parametrization(d: int) -> sp.csr_matrix:
    """Sparse complex E with vec(X) = E @ p for d*d real parameters p.

    Parameters: d diagonal entries, then (re, im) of each strictly lower
    entry in row-major order.
    """
    rows, cols, vals = [], [], []
    lower = [(a, b) for a in range(d) for b in range(a)]
    re_idx = {ab: d + 2 * k for k, ab in enumerate(lower)}
    for a in range(d):
        for b in range(d):
            pos = a * d + b
            if a == b:
                rows.append(pos), cols.append(a), vals.append(1.0)
            elif a > b:
                r = re_idx[(a, b)]
                rows += [pos, pos]
                cols += [r, r + 1]
                vals += [1.0, 1.0j]
            else:
                r = re_idx[(b, a)]
                rows += [pos, pos]
                cols += [r, r + 1]
                vals += [1.0, -1.0j]
    return sp.csr_matrix((vals, (rows, cols)), shape=(d * d, d * d), dtype=complex)


def _embedding_rows(d: int):
    """For each SCS-vectorized entry of the 2d x 2d embedding: (flat H index, part, scale)."""
    flat, part, scale = [], [], []
    for j in range(2 * d):
        for i in range(j, 2 * d):
            s = 1.0 if i == j else np.sqrt(2.0)
            if i < d:
                flat.append(i * d + j), part.append(0)
            elif j >= d:
                flat.append((i - d) * d + (j - d)), part.append(0)
            else:
                flat.append((i - d) * d + j), part.append(1)
            scale.append(s)
    return np.array(flat), np.array(part), np.array(scale)


def lower(prog: ConicProgram):
    """Build SCS data (A, b, c, cone dict) and a decoder for the solution vector."""
    names = list(prog.blocks)
    dims = {b: prog.block_dim(b) for b in names}
    offsets, n = {}, 0
    for b in names:
        offsets[b] = n
        n += dims[b] ** 2
    params = {}
    for b in names:
        d = dims[b]
        e = _hermitian_parametrization(d)
        # place block parameters in the global vector
        params[b] = sp.hstack(
            [sp.csr_matrix((d * d, offsets[b])), e, sp.csr_matrix((d * d, n - offsets[b] - d * d))]
        ).tocsr()

    def linear_row(coeffs):
        row = np.zeros(n)
        for b, a in coeffs.items():
            row += np.real(np.asarray(a, dtype=complex).reshape(-1).conj() @ params[b])
        return row

    c = linear_row(prog.objective)
    eq_a = np.array([linear_row(e.coeffs) for e in prog.equalities]).reshape(len(prog.equalities), n)
    eq_b = np.array([e.rhs for e in prog.equalities], dtype=float)

    cone_a, cone_b, psd = [], [], []
    for cone in prog.cones:
        d = prog.cone_dim(cone)
        g = sp.csr_matrix((d * d, n), dtype=complex)
        for t in cone.terms:
            src = np.arange(d * d).reshape(d, d)
            if t.transpose:
                src = partial_transpose(src, t.transpose, prog.blocks[t.block])
            g = g + t.coeff * params[t.block][src.reshape(-1)]
        const = np.zeros(d * d, dtype=complex) if cone.constant is None else np.asarray(cone.constant).reshape(-1)
        flat, part, scale = _embedding_rows(d)
        rows = g[flat]
        re_rows, im_rows = rows.real, rows.imag
        pick = sp.diags((part == 0).astype(float)) @ re_rows + sp.diags((part == 1).astype(float)) @ im_rows
        lin = sp.diags(scale) @ pick
        cst = np.where(part == 0, const[flat].real, const[flat].imag) * scale
        # s = F + L x  ->  A = -L, b = F
        cone_a.append(-lin)
        cone_b.append(cst)
        psd.append(2 * d)

    a = sp.vstack([sp.csr_matrix(eq_a)] + cone_a).tocsc()
    b = np.concatenate([eq_b] + cone_b)
    cones = {"z": len(prog.equalities), "s": psd}

    def decode(x):
        return {bname: (params[bname] @ x).reshape(dims[bname], dims[bname]) for bname in names}

    return {"A": a, "b": b, "c": c}, cones, decode


def solve(prog: ConicProgram, tol: float = 1e-7, max_iter: int = 50_000, seed: int = 0):
    import scs

    data, cones, decode = lower(prog)
    solver = scs.SCS(
        data,
        cones,
        eps_abs=tol,
        eps_rel=tol,
        max_iters=int(max_iter),
        verbose=False,
        acceleration_lookback=10,
    )
    sol = solver.solve()
    info = sol["info"]
    status = {"solved": OPTIMAL, "solved_inaccurate": MAX_ITER}.get(info["status"], None)
    if status is None:
        status = INFEASIBLE if "infeasible" in info["status"] else MAX_ITER
    values = {k: (v + v.conj().T) / 2 for k, v in decode(sol["x"]).items()}
    report = SolveReport(
        objective=float(info["pobj"]),
        iterations=int(info["iter"]),
        primal_residual=float(info["res_pri"]),
        dual_residual=float(info["res_dual"]),
        gap=float(abs(info["gap"])),
        status=status,
    )
    return values, report


def main():
    request = json.load(sys.stdin)
    prog = program_from_json(request["program"])
    settings = request.get("settings", {})
    values, report = solve(prog, settings.get("tol", 1e-7), settings.get("max_iter", 50_000), settings.get("seed", 0))
    json.dump(solution_to_json(prog, values, report, "scs"), sys.stdout)


if __name__ == "__main__":
    main()
