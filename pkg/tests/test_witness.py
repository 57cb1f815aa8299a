import json

import numpy as np
import pytest

from gmeact import witness
from gmeact.linalg import partial_transpose
from gmeact.states import ghz_state, n_copy_state
from gmeact.witness import (
    PAIR_PARTITION,
    SINGLE_PARTITION,
    SolverError,
    Witness,
    build_problem,
    evaluate,
    paper_variant_report,
    validate_certificate,
)


def test_build_problem_shapes(rho2_q0):
    prob = build_problem(rho2_q0)
    assert prob.parts == PAIR_PARTITION
    assert set(prob.program.blocks) == {"W", "P_A1A2", "P_B1B2", "P_C1C2"}
    assert len(prob.program.cones) == 6
    assert build_problem(ghz_state()).parts == SINGLE_PARTITION


def test_build_problem_rejects_bad_partition(rho2_q0):
    with pytest.raises(ValueError, match="cover"):
        build_problem(rho2_q0, {"A": (0, 1), "B": (2, 3)})
    with pytest.raises(ValueError):
        build_problem(np.eye(4) / 4)


def test_ghz_witness():
    w = witness.solve(build_problem(ghz_state()), tol=1e-5)
    assert validate_certificate(w).passed
    assert w.value == pytest.approx(-1 / 6, abs=1e-4)
    assert w.dual_bound <= w.value + 1e-9


def test_maximally_mixed_state_is_not_detected():
    w = witness.solve(build_problem(np.eye(8) / 8), tol=1e-5)
    assert w.value == pytest.approx(1 / 8, abs=1e-6)


def test_sdp_witness_at_q0(sdp_witness_q0, rho2_q0):
    w = sdp_witness_q0
    assert validate_certificate(w).passed
    assert w.value < 0
    assert w.dual_bound <= w.value
    assert abs(w.value - evaluate(w, rho2_q0)) < 1e-15
    assert w.diagnostics["repair_shift"] < 1e-5


def test_solver_error_on_iteration_budget(rho2_q0):
    with pytest.raises(SolverError) as info:
        witness.solve(build_problem(rho2_q0), max_iter=20)
    assert info.value.report.status == "max_iter"
    with pytest.raises(ValueError):
        witness.solve(build_problem(rho2_q0), tol=-1)


def test_paper_witness_properties(paper_witness):
    assert validate_certificate(paper_witness, tol=1e-9, paper=True).passed
    assert evaluate(paper_witness, np.eye(64) / 64) == pytest.approx(1 / 64)
    assert np.isclose(np.trace(paper_witness.W).real, 1.0)
    with pytest.raises(ValueError):
        evaluate(paper_witness, np.eye(8) / 8)


def test_variant_report():
    report = paper_variant_report()
    assert report["canonical"] == "ghz"
    assert report["ghz"]["pauli_table"] and report["ghz"]["certificate"]
    assert report["differences"]
    off = paper_variant_report(0.0)
    assert off["ghz"]["value_matches"] is None


def test_paper_witness_value_over_q(paper_witness):
    values = [evaluate(paper_witness, n_copy_state(q, 2)) for q in (0.0, 0.03, 0.06)]
    assert values[0] == pytest.approx(-0.0104167, abs=1e-7)
    assert values[2] == pytest.approx(-0.0089042, abs=1e-7)
    assert values[0] < values[1] < values[2]


def test_tampered_certificate_fails(paper_witness):
    P, Q = paper_witness.certificates["A1A2"]
    bad = Witness(paper_witness.W, dict(paper_witness.certificates, A1A2=(P - 0.01 * np.eye(64), Q)))
    report = validate_certificate(bad)
    assert not report.passed
    names = {c.name for c in report.failed()}
    assert "A1A2: P psd" in names and "A1A2: W = P + Q^T" in names
    missing = Witness(paper_witness.W, {"A1A2": paper_witness.certificates["A1A2"]})
    assert not validate_certificate(missing).passed


def test_witness_json_roundtrip(paper_witness):
    obj = json.loads(json.dumps(paper_witness.to_json()))
    back = Witness.from_json(obj)
    assert np.array_equal(back.W, paper_witness.W)
    assert back.parts == paper_witness.parts
    assert validate_certificate(back, tol=1e-9).passed
    assert len(obj["pauli"]) == 32


def test_witness_nonnegative_on_random_pair_products(paper_witness):
    rng = np.random.default_rng(11)
    groups = list(PAIR_PARTITION.values())
    for _ in range(200):
        k = rng.integers(3)
        sub = groups[k]
        rest = [s for s in range(6) if s not in sub]
        a = rng.normal(size=4) + 1j * rng.normal(size=4)
        b = rng.normal(size=16) + 1j * rng.normal(size=16)
        psi = np.kron(a, b).reshape([2] * 6)
        psi = np.moveaxis(psi, list(range(6)), list(sub) + rest).reshape(64)
        psi /= np.linalg.norm(psi)
        assert np.vdot(psi, paper_witness.W @ psi).real >= -1e-12
        # the same holds for the partial transpose on the group
        assert np.linalg.eigvalsh(partial_transpose(np.outer(psi, psi.conj()), sub))[0] > -1e-12
