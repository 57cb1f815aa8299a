"""Process-boundary adapter for external SDP solvers.

Protocol: the parent writes one JSON document to the child's stdin::

    {"program": <program json>, "settings": {"tol": ..., "max_iter": ..., "seed": ...}}

and reads one JSON document from its stdout::

    {"status": "optimal" | "max_iter" | "infeasible", "objective": float,
     "iterations": int, "primal_residual": float, "dual_residual": float,
     "gap": float, "solver": str, "blocks": {name: <matrix json>}}

``<program json>`` mirrors :class:`~gmeact.solver.conic.ConicProgram`::

    {"blocks": [{"name": str, "dims": [int, ...]}, ...],
     "objective": {name: <matrix json>},
     "equalities": [{"coeffs": {name: <matrix json>}, "rhs": float}],
     "cones": [{"name": str,
                "terms": [{"block": str, "coeff": float, "transpose": [int]}],
                "constant": <matrix json> | null}]}

Matrices use the package-wide ``{"dims", "re", "im"}`` row-major format.
"""
from __future__ import annotations

import json
import subprocess
import sys

import numpy as np

from ..linalg import matrix_from_json, matrix_to_json
from .conic import ConeConstraint, ConicProgram, EqualityConstraint, SolveReport, Term

DEFAULT_BACKEND = [sys.executable, "-m", "gmeact.solver.scs_backend"]


class ExternalSolverError(RuntimeError):
    pass


def program_to_json(prog: ConicProgram) -> dict:
    def mat(name, m):
        return matrix_to_json(np.asarray(m), prog.blocks[name])

    return {
        "blocks": [{"name": b, "dims": list(d)} for b, d in prog.blocks.items()],
        "objective": {b: mat(b, m) for b, m in prog.objective.items()},
        "equalities": [
            {"coeffs": {b: mat(b, m) for b, m in e.coeffs.items()}, "rhs": float(e.rhs)} for e in prog.equalities
        ],
        "cones": [
            {
                "name": c.name,
                "terms": [{"block": t.block, "coeff": float(t.coeff), "transpose": list(t.transpose)} for t in c.terms],
                "constant": None if c.constant is None else mat(c.terms[0].block, c.constant),
            }
            for c in prog.cones
        ],
    }


def program_from_json(obj: dict) -> ConicProgram:
    return ConicProgram(
        blocks={b["name"]: list(b["dims"]) for b in obj["blocks"]},
        objective={b: matrix_from_json(m) for b, m in obj.get("objective", {}).items()},
        equalities=[
            EqualityConstraint({b: matrix_from_json(m) for b, m in e["coeffs"].items()}, float(e["rhs"]))
            for e in obj.get("equalities", [])
        ],
        cones=[
            ConeConstraint(
                c["name"],
                [Term(t["block"], float(t.get("coeff", 1.0)), tuple(t.get("transpose", ()))) for t in c["terms"]],
                None if c.get("constant") is None else matrix_from_json(c["constant"]),
            )
            for c in obj.get("cones", [])
        ],
    )


def solution_to_json(prog: ConicProgram, values: dict, report: SolveReport, solver: str) -> dict:
    out = report.to_json()
    out.pop("seconds", None)
    out.pop("dual_objective", None)
    out["solver"] = solver
    out["blocks"] = {b: matrix_to_json(values[b], prog.blocks[b]) for b in prog.blocks}
    return out


class ExternalSolver:
    """Run a solver in a child process; same call signature as ``solve_conic``."""

    def __init__(self, command=None, timeout: float | None = 3600.0):
        self.command = list(command or DEFAULT_BACKEND)
        self.timeout = timeout

    def __call__(self, prog: ConicProgram, tol: float = 1e-7, max_iter: int = 50_000, seed: int = 0, **_):
        payload = json.dumps(
            {"program": program_to_json(prog), "settings": {"tol": tol, "max_iter": max_iter, "seed": seed}}
        )
        proc = subprocess.run(
            self.command, input=payload, capture_output=True, text=True, timeout=self.timeout, check=False
        )
        if proc.returncode != 0:
            raise ExternalSolverError(f"external solver exited with {proc.returncode}: {proc.stderr.strip()[-2000:]}")
        try:
            sol = json.loads(proc.stdout)
        except json.JSONDecodeError as exc:
            raise ExternalSolverError(f"external solver wrote invalid JSON: {exc}") from exc
        values = {b: matrix_from_json(m) for b, m in sol["blocks"].items()}
        report = SolveReport(
            objective=float(sol["objective"]),
            iterations=int(sol.get("iterations", 0)),
            primal_residual=float(sol.get("primal_residual", float("nan"))),
            dual_residual=float(sol.get("dual_residual", float("nan"))),
            gap=float(sol.get("gap", float("nan"))),
            status=sol["status"],
        )
        return values, report
