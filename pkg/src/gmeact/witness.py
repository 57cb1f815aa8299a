"""Fully decomposable GME witnesses.

A witness ``W`` with ``Tr W = 1`` is fully decomposable for a partition into
groups ``k`` when ``W = P_k + Q_k^{T_k}`` with ``P_k, Q_k >= 0`` for every
group. Such a ``W`` has a non-negative expectation on every state that is
separable across some ``k | rest`` cut, and hence on all biseparable states.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import pauli
from .linalg import (
    as_array,
    matrix_from_json,
    matrix_to_json,
    min_eigenvalue,
    partial_transpose,
    permute_subsystems,
    projector,
)
from .solver import (
    INFEASIBLE,
    OPTIMAL,
    ConeConstraint,
    ConicProgram,
    EqualityConstraint,
    SolveReport,
    Term,
    min_eig_projection,
    solve_conic,
)

log = logging.getLogger(__name__)

PAIR_PARTITION = {"A1A2": (0, 1), "B1B2": (2, 3), "C1C2": (4, 5)}
SINGLE_PARTITION = {"A": (0,), "B": (1,), "C": (2,)}

# Non-zero entries of the two-copy witness exactly as tabulated (times 1/12).
TABLE_ENTRIES = [
    ("000000", "111111", -1),
    ("000011", "000011", 1),
    ("001100", "001100", 1),
    ("001111", "001111", 1),
    ("110000", "110000", 1),
    ("110011", "110011", 1),
    ("111100", "111100", 1),
    ("111111", "000000", -1),
    ("010101", "010101", 1),
    ("011001", "011001", 1),
    ("010101", "101010", -1),
    ("011010", "011010", 1),
    ("100101", "100101", 1),
    ("101010", "010101", -1),
    ("100110", "100110", 1),
    ("101001", "101001", 1),
]

# GHZ-basis form: diagonal pairs |i><i| + |~i><~i| for i in GHZ_DIAGONAL and
# coherences -(|i><~i| + h.c.) for i in GHZ_COHERENT, all times 1/12.
GHZ_DIAGONAL = (3, 12, 15, 22, 25, 26)
GHZ_COHERENT = (0, 21)

P_DIAGONALS = {
    "A1A2": ("000011", "001100", "010110", "011001", "100110", "101001", "110011", "111100"),
    "B1B2": ("000011", "001111", "010110", "011010", "100101", "101001", "110000", "111100"),
}

Q_EXTRA = {
    "A1A2": (("001111", "110000"), ("011010", "100101")),
    "B1B2": (("001100", "110011"), ("011001", "100110")),
    "C1C2": (("000011", "111100"), ("010110", "101001")),
}

_T = Fraction(1, 3)
PAULI_TABLE = [
    ("IIIIII", Fraction(1)), ("IIIZIZ", -_T), ("IIZIZI", -_T), ("IIZZZZ", Fraction(1)),
    ("IZIIIZ", -_T), ("IZIZII", -_T), ("IZZIZZ", -_T), ("IZZZZI", -_T),
    ("ZIIIZI", -_T), ("ZIIZZZ", -_T), ("ZIZIII", -_T), ("ZIZZIZ", -_T),
    ("ZZIIZZ", Fraction(1)), ("ZZIZZI", -_T), ("ZZZIIZ", -_T), ("ZZZZII", Fraction(1)),
    ("XXXXXX", -_T), ("XXXYXY", _T), ("XXYXYX", _T), ("XXYYYY", -_T),
    ("XYXXXY", _T), ("XYXYXX", _T), ("XYYXYY", -_T), ("XYYYYX", -_T),
    ("YXXXYX", _T), ("YXXYYY", -_T), ("YXYXXX", _T), ("YXYYXY", -_T),
    ("YYXXYY", -_T), ("YYXYYX", -_T), ("YYYXXY", -_T), ("YYYYXX", -_T),
]

PAPER_VALUE_Q0 = -1.042e-2
PAPER_VALUE_Q006 = -0.887e-2


class SolverError(RuntimeError):
    """The SDP solver stopped without meeting its tolerances."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InfeasibleError(SolverError):
    pass


@dataclass
class SdpProblem:
    rho: np.ndarray
    parts: dict
    program: ConicProgram


@dataclass
class Witness:
    W: np.ndarray
    certificates: dict  # group name -> (P, Q)
    parts: dict = field(default_factory=lambda: dict(PAIR_PARTITION))
    value: float | None = None
    dual_bound: float | None = None
    report: SolveReport | None = field(default=None, repr=False)
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def n_qubits(self) -> int:
        return int(round(np.log2(self.W.shape[0])))

    def pauli(self, tol=1e-10) -> dict:
        return pauli.pauli_coefficients(self.W, tol=tol)

    def to_json(self) -> dict:
        dims = [2] * self.n_qubits
        out = {
            "W": matrix_to_json(self.W, dims),
            "certificates": {
                k: {"P": matrix_to_json(p, dims), "Q": matrix_to_json(q, dims)} for k, (p, q) in self.certificates.items()
            },
            "pauli": [{"word": w, "m": m} for w, m in self.pauli().items()],
            "parts": {k: list(v) for k, v in self.parts.items()},
        }
        if self.value is not None:
            out["value"] = self.value
        return out

    @classmethod
    def from_json(cls, obj) -> "Witness":
        parts = {k: tuple(v) for k, v in obj.get("parts", PAIR_PARTITION).items()}
        certs = {k: (matrix_from_json(c["P"]), matrix_from_json(c["Q"])) for k, c in obj["certificates"].items()}
        return cls(matrix_from_json(obj["W"]), certs, parts, value=obj.get("value"))


def default_partition(n_qubits: int) -> dict:
    if n_qubits == 6:
        return dict(PAIR_PARTITION)
    if n_qubits == 3:
        return dict(SINGLE_PARTITION)
    raise ValueError(f"no default partition for {n_qubits} qubits")


def build_problem(rho, parts: dict | None = None) -> SdpProblem:
    """Lower ``min Tr[W rho]`` over fully decomposable ``W`` to a conic program.

    Variables are ``W`` and one ``P_k`` per group; the cones are ``P_k >= 0``
    and ``(W - P_k)^{T_k} >= 0``; ``Tr W = 1``.
    """
    arr, dims = as_array(rho)
    if any(d != 2 for d in dims):
        raise ValueError("witness search expects a qubit register")
    parts = default_partition(len(dims)) if parts is None else {k: tuple(v) for k, v in parts.items()}
    used = sorted(s for v in parts.values() for s in v)
    if used != list(range(len(dims))):
        raise ValueError(f"partition {parts} does not cover the {len(dims)}-qubit register exactly")
    d = arr.shape[0]
    blocks = {"W": list(dims)}
    cones = []
    for k, sub in parts.items():
        blocks[f"P_{k}"] = list(dims)
        cones.append(ConeConstraint(f"P_{k}", [Term(f"P_{k}")]))
        cones.append(ConeConstraint(f"Q_{k}", [Term("W", 1.0, sub), Term(f"P_{k}", -1.0, sub)]))
    prog = ConicProgram(
        blocks=blocks,
        objective={"W": np.asarray(arr, dtype=complex)},
        equalities=[EqualityConstraint({"W": np.eye(d)}, 1.0)],
        cones=cones,
    )
    return SdpProblem(np.asarray(arr, dtype=complex), parts, prog)


def _repair(W, Ps, parts, dims):
    """Shift a nearly feasible solution onto an exactly decomposable witness.

    With ``E_k = W - P_k^+ - (Q_k^+)^{T_k}`` (``^+`` = PSD part) and
    ``delta = max_k ||E_k||``, the operator ``W + delta*I`` decomposes with
    ``P_k' = P_k^+ + E_k + delta*I >= 0`` and ``Q_k' = Q_k^+``. Renormalizing
    the trace keeps all three properties.
    """
    d = W.shape[0]
    pos_P, pos_Q, errs = {}, {}, {}
    for k, sub in parts.items():
        pos_P[k] = min_eig_projection(Ps[k])
        pos_Q[k] = min_eig_projection(partial_transpose(W - Ps[k], sub, dims))
        errs[k] = W - pos_P[k] - partial_transpose(pos_Q[k], sub, dims)
    delta = max(np.linalg.norm(e, 2) for e in errs.values())
    scale = np.trace(W).real + d * delta
    W_new = (W + delta * np.eye(d)) / scale
    certs = {}
    for k, sub in parts.items():
        P = (pos_P[k] + errs[k] + delta * np.eye(d)) / scale
        P = (P + P.conj().T) / 2
        Q = partial_transpose(W_new - P, sub, dims)
        certs[k] = (P, (Q + Q.conj().T) / 2)
    return (W_new + W_new.conj().T) / 2, certs, float(delta)


def _dual_bound(rho, report, parts, dims):
    """Certified lower bound on the optimum from the solver's cone duals.

    Any ``Y_k`` that are PSD with PSD partial transpose on ``k`` and
    ``rho - lam*I = sum_k Y_k`` give ``Tr[W rho] >= lam`` for every feasible
    ``W``. The solver duals are shifted by multiples of the identity to make
    the first groups exactly feasible; the last group absorbs the rest.
    """
    duals = report.duals.get("cones", {}) if report is not None else {}
    names = list(parts)
    if not all(f"P_{k}" in duals for k in names):
        return None
    rest = np.array(rho, dtype=complex)
    for k in names[:-1]:
        Y = -duals[f"P_{k}"]
        shift = max(0.0, -min_eigenvalue(Y), -min_eigenvalue(partial_transpose(Y, parts[k], dims)))
        rest = rest - (Y + shift * np.eye(Y.shape[0]))
    last = parts[names[-1]]
    return float(min(min_eigenvalue(rest), min_eigenvalue(partial_transpose(rest, last, dims))))


def solve(problem: SdpProblem, tol: float = 1e-7, max_iter: int = 50_000, seed: int = 0, solver=None) -> Witness:
    """Solve the witness SDP and return an exactly decomposable witness.

    ``solver`` defaults to the embedded ADMM solver; any callable with the
    ``solve_conic`` signature works, e.g. :class:`~gmeact.solver.adapter.ExternalSolver`.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    solver = solve_conic if solver is None else solver
    values, report = solver(problem.program, tol=tol, max_iter=max_iter, seed=seed)
    if report.status == INFEASIBLE:
        raise InfeasibleError("witness SDP reported infeasible", report)
    if report.status != OPTIMAL:
        raise SolverError(
            f"solver stopped with status {report.status} after {report.iterations} iterations "
            f"(primal {report.primal_residual:.2e}, dual {report.dual_residual:.2e}, gap {report.gap:.2e})",
            report,
        )
    dims = [2] * int(round(np.log2(problem.rho.shape[0])))
    Ps = {k: values[f"P_{k}"] for k in problem.parts}
    W, certs, delta = _repair(values["W"], Ps, problem.parts, dims)
    w = Witness(W, certs, dict(problem.parts), report=report)
    w.value = evaluate(w, problem.rho)
    w.dual_bound = _dual_bound(problem.rho, report, problem.parts, dims)
    w.diagnostics["repair_shift"] = delta
    log.info("witness value %.10g (solver %.10g, shift %.2e)", w.value, report.objective, delta)
    return w


def evaluate(w, rho) -> float:
    W = w.W if isinstance(w, Witness) else np.asarray(w)
    arr = as_array(rho)[0]
    if arr.shape != W.shape:
        raise ValueError(f"state of shape {arr.shape} does not match witness of shape {W.shape}")
    return float(np.real(np.vdot(W, arr)))


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float


@dataclass
class CertificateReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {"passed": self.passed, "checks": [vars(c) for c in self.checks]}


def validate_certificate(w: Witness, tol: float = 1e-8, paper: bool = False) -> CertificateReport:
    """Itemized check of every witness property; never raises on failure.

    With ``paper=True`` the tabulated relations between the certificate
    matrices are checked as well.
    """
    checks = []

    def add(name, value, threshold, ok=None):
        ok = value <= threshold if ok is None else ok
        checks.append(Check(name, bool(ok), float(value), float(threshold)))

    W = np.asarray(w.W)
    dims = [2] * w.n_qubits
    add("W hermitian", np.max(np.abs(W - W.conj().T)), tol)
    add("trace W = 1", abs(np.trace(W).real - 1.0), tol)
    for k, sub in w.parts.items():
        if k not in w.certificates:
            add(f"{k}: certificate present", 1.0, 0.0)
            continue
        P, Q = (np.asarray(m) for m in w.certificates[k])
        lam_p, lam_q = min_eigenvalue(P), min_eigenvalue(Q)
        add(f"{k}: P psd", -lam_p, tol)
        add(f"{k}: Q psd", -lam_q, tol)
        add(f"{k}: W = P + Q^T", np.linalg.norm(W - P - partial_transpose(Q, sub, dims)), max(tol, 1e-7) if not paper else tol)
    if paper:
        pa, pb, pc = (np.asarray(w.certificates[k][0]) for k in ("A1A2", "B1B2", "C1C2"))
        add("P_C1C2 = |P_A1A2 - P_B1B2|", np.max(np.abs(pc - np.abs(pa - pb))), tol)
        for k, pairs in Q_EXTRA.items():
            P, Q = w.certificates[k]
            expected = np.asarray(P) + sum(projector(_ghz_minus(a, b)) / 12 for a, b in pairs)
            add(f"{k}: Q = P + difference projectors", np.max(np.abs(np.asarray(Q) - expected)), tol)
    return CertificateReport(checks)


def _basis(label: str) -> np.ndarray:
    v = np.zeros(2 ** len(label))
    v[int(label, 2)] = 1.0
    return v


def _ghz_minus(a: str, b: str) -> np.ndarray:
    return _basis(a) - _basis(b)


def table_witness() -> np.ndarray:
    """The witness matrix assembled from the tabulated entries as printed."""
    W = np.zeros((64, 64), dtype=complex)
    for i, j, s in TABLE_ENTRIES:
        W[int(i, 2), int(j, 2)] = s / 12
    return W


def ghz_form_witness() -> np.ndarray:
    """The witness matrix assembled from its GHZ-basis expression."""
    W = np.zeros((64, 64), dtype=complex)
    for i in GHZ_DIAGONAL:
        W[i, i] += 1 / 12
        W[63 - i, 63 - i] += 1 / 12
    for i in GHZ_COHERENT:
        g = _basis(format(i, "06b")) - _basis(format(63 - i, "06b"))
        W += projector(g) / 12
        W[i, i] -= 1 / 12
        W[63 - i, 63 - i] -= 1 / 12
    return W


def paper_certificates(W: np.ndarray) -> dict:
    """Tabulated ``P_k`` and the ``Q_k`` built from them, for the given ``W``."""
    P = {k: np.diag([1 / 24 if format(i, "06b") in diag else 0.0 for i in range(64)]).astype(complex) for k, diag in P_DIAGONALS.items()}
    P["C1C2"] = np.abs(P["A1A2"] - P["B1B2"]).astype(complex)
    certs = {}
    for k in PAIR_PARTITION:
        Q = P[k] + sum(projector(_ghz_minus(a, b)) / 12 for a, b in Q_EXTRA[k])
        certs[k] = (P[k], Q.astype(complex))
    return certs


def pauli_table_matches(W, tol: float = 1e-9) -> bool:
    coeffs = pauli.pauli_coefficients(W, tol=1e-10)
    expected = {w: float(m) for w, m in PAULI_TABLE}
    if list(coeffs) != list(expected):
        return False
    return all(abs(coeffs[w] - expected[w]) <= tol for w in expected)


def paper_variant_report(q: float = 0.06) -> dict:
    """Compare the printed entry table against the GHZ-basis expression.

    For each variant: does it reproduce the tabulated Pauli decomposition,
    does the tabulated certificate decompose it, and what is its value on
    two copies of ``rho(q)``. Also lists the entries where the two differ.
    """
    from .states import n_copy_state

    rho2 = n_copy_state(q, 2).entries
    out = {}
    for name, W in (("table", table_witness()), ("ghz", ghz_form_witness())):
        w = Witness(W, paper_certificates(W))
        report = validate_certificate(w, tol=1e-9, paper=True)
        value = evaluate(w, rho2)
        out[name] = {
            "pauli_table": pauli_table_matches(W),
            "certificate": report.passed,
            "value": value,
            "value_matches": abs(value - PAPER_VALUE_Q006) <= 1e-4 if abs(q - 0.06) < 1e-15 else None,
        }
    diff = ghz_form_witness() - table_witness()
    out["differences"] = [
        (format(int(i), "06b"), format(int(j), "06b"), float(diff[i, j].real)) for i, j in zip(*np.nonzero(np.abs(diff) > 0))
    ]
    ok = [n for n in ("table", "ghz") if out[n]["pauli_table"] and out[n]["certificate"] and out[n]["value_matches"] is not False]
    out["canonical"] = ok[0] if len(ok) == 1 else None
    return out


def load_paper_witness(variant: str | None = None) -> Witness:
    """The published two-copy witness with its tabulated certificate.

    ``variant=None`` picks whichever of ``"table"`` / ``"ghz"`` passes all
    consistency checks of :func:`paper_variant_report`.
    """
    report = paper_variant_report()
    if variant is None:
        variant = report["canonical"]
        if variant is None:
            raise RuntimeError("no published witness variant passes all consistency checks")
    W = {"table": table_witness, "ghz": ghz_form_witness}[variant]()
    w = Witness(W, paper_certificates(W), dict(PAIR_PARTITION))
    w.diagnostics = {"variant": variant, "variants": report}
    return w


def random_biseparable_states(n: int, seed: int = 0, mixed: bool = False, parts: dict | None = None):
    """Yield random states that are separable across one group of ``parts``.

    Pure samples are Haar-random ``|alpha>_k (x) |beta>_rest``; mixed samples
    use Ginibre-random local density matrices. Groupings cycle through
    ``parts``.
    """
    parts = PAIR_PARTITION if parts is None else parts
    n_q = sum(len(v) for v in parts.values())
    rng = np.random.default_rng(seed)
    names = list(parts)

    def local(d):
        g = rng.normal(size=(d, d if mixed else 1)) + 1j * rng.normal(size=(d, d if mixed else 1))
        m = g @ g.conj().T
        return m / np.trace(m).real

    for s in range(n):
        sub = list(parts[names[s % len(names)]])
        rest = [i for i in range(n_q) if i not in sub]
        rho = np.kron(local(2 ** len(sub)), local(2 ** len(rest)))
        yield permute_subsystems(rho, list(np.argsort(sub + rest)), [2] * n_q)
