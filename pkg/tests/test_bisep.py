import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, random_ket
from gmeact.bisep import (
    BISEPARABLE,
    INCONCLUSIVE,
    LP_VERTEX,
    SINGLE_PARTY,
    CertifierConfig,
    _seesaw,
    _to_front,
    certify,
    find_mixture,
    max_overlap_product,
    subtract,
)
from gmeact.linalg import permute_subsystems, projector, purity
from gmeact.states import A_BC, B_AC, constituent_ket, ghz_state, single_copy_state


def schmidt_rank_one(psi, single):
    order = [single] + [q for q in range(3) if q != single]
    m = permute_subsystems(np.asarray(psi), order, [2, 2, 2]).reshape(2, 4)
    return np.linalg.svd(m, compute_uv=False)[1] < 1e-9


def depolarized(rho, p):
    return (1 - p) * np.asarray(rho) + p * np.eye(8) / 8


def test_config_validation():
    for kwargs in ({"b": 0.0}, {"b": 1.0}, {"weight_strategy": "greedy"}, {"j_max": 0}):
        with pytest.raises(ValueError):
            CertifierConfig(**kwargs)


def test_max_overlap_product_on_product_and_ghz():
    a0 = constituent_ket(0)
    ket, val = max_overlap_product(projector(a0.amplitudes), A_BC, seed_ket=a0, return_overlap=True)
    assert val == pytest.approx(1.0, abs=1e-10)
    assert abs(np.vdot(ket.amplitudes, a0.amplitudes)) == pytest.approx(1.0, abs=1e-8)
    for label in (A_BC, B_AC):
        ket, val = max_overlap_product(ghz_state(), label, return_overlap=True)
        assert val == pytest.approx(0.5, abs=1e-9)
        assert schmidt_rank_one(ket.amplitudes, SINGLE_PARTY[label])


def test_seesaw_history_is_monotone():
    rng = np.random.default_rng(0)
    rho = random_density(8, rng)
    r4, _ = _to_front(rho, 0)
    betas = np.array([random_ket(4, rng) for _ in range(6)])
    _, _, vals, history = _seesaw(r4, betas, 100, 1e-14)
    assert np.all(np.diff(history, axis=0) >= -1e-12)
    assert np.all(vals <= np.linalg.eigvalsh(rho)[-1] + 1e-12)


def test_max_overlap_bounded_by_top_eigenvalue():
    rng = np.random.default_rng(1)
    for _ in range(5):
        rho = random_density(8, rng, rank=2)
        _, val = max_overlap_product(rho, B_AC, rng=rng, return_overlap=True)
        assert 0 < val <= np.linalg.eigvalsh(rho)[-1] + 1e-12


def test_find_mixture_structure():
    rho = single_copy_state(0.06)
    mix = find_mixture(rho)
    assert len(mix.kets) == 8
    assert mix.weights.sum() == pytest.approx(1.0)
    assert np.trace(mix.eta).real == pytest.approx(1.0)
    for i, psi in enumerate(mix.kets):
        assert schmidt_rank_one(psi, 0 if i < 4 else 1)
    assert np.allclose(mix.overlaps, [np.vdot(k, rho.entries @ k).real for k in mix.kets])
    vertex = find_mixture(rho, cfg=CertifierConfig(weight_strategy=LP_VERTEX))
    assert sorted(vertex.weights)[-1] == 1.0


def test_find_mixture_recovers_product_constituent():
    a0 = constituent_ket(0).amplitudes
    mix = find_mixture(projector(a0))
    assert abs(np.vdot(mix.kets[0], a0)) ** 2 == pytest.approx(1.0, abs=1e-8)


def test_subtract_closed_form():
    res = subtract(np.diag([0.75, 0.25]), np.diag([1.0, 0.0]))
    assert res.epsilon == pytest.approx(0.5, abs=1e-6)
    assert res.epsilon_max == pytest.approx(0.75, abs=1e-9)
    assert np.allclose(res.rho, np.eye(2) / 2, atol=1e-6)
    assert not res.stalled


def test_subtract_stalls_on_itself():
    eta = projector(constituent_ket(3).amplitudes)
    res = subtract(eta, eta)
    assert res.stalled and res.epsilon == 0.0


def test_subtract_keeps_remainder_psd():
    rng = np.random.default_rng(2)
    for _ in range(10):
        rho, eta = random_density(8, rng), random_density(8, rng, rank=3)
        res = subtract(rho, eta)
        assert 0.0 <= res.epsilon <= res.epsilon_max
        assert np.linalg.eigvalsh(res.rho)[0] > -1e-9
        assert purity(res.rho) <= purity(rho) + 1e-12


def test_certify_maximally_mixed_state():
    trace = certify(np.eye(8) / 8)
    assert trace.verdict == BISEPARABLE and trace.iterations == 0


def test_certify_ghz_is_inconclusive():
    trace = certify(ghz_state(), CertifierConfig(j_max=50))
    assert trace.verdict == INCONCLUSIVE
    assert trace.final_purity > 1 / 7


def test_certify_depolarized_state_and_decomposition():
    rho0 = depolarized(single_copy_state(0.06).entries, 0.1)
    trace = certify(rho0)
    assert trace.verdict == BISEPARABLE
    assert trace.final_purity <= 1 / 7 + 1e-12
    assert np.all(np.diff(trace.purities) < 0)
    weights, etas, rest = trace.decomposition()
    rebuilt = sum(c * e for c, e in zip(weights, etas)) + rest * trace.final_rho
    assert np.max(np.abs(rebuilt - rho0)) < 1e-9
    obj = json.loads(json.dumps(trace.to_json(include_matrices=True)))
    assert obj["verdict"] == BISEPARABLE and len(obj["eta"]) == trace.iterations


def test_certify_converges_on_last_allowed_iteration():
    rho0 = depolarized(single_copy_state(0.06).entries, 0.1)
    needed = certify(rho0).iterations
    assert certify(rho0, CertifierConfig(j_max=needed)).verdict == BISEPARABLE
    if needed > 1:
        assert certify(rho0, CertifierConfig(j_max=needed - 1)).verdict == INCONCLUSIVE


def test_certify_rejects_wrong_shape():
    with pytest.raises(ValueError):
        certify(np.eye(4) / 4)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.floats(0.0, 0.3))
def test_biseparable_verdict_implies_small_purity(seed, p):
    rho = depolarized(random_density(8, np.random.default_rng(seed), rank=2), p)
    trace = certify(rho, CertifierConfig(j_max=30))
    if trace.verdict == BISEPARABLE:
        assert trace.final_purity <= 1 / 7 + 1e-12
    assert trace.final_purity <= trace.initial_purity + 1e-12
