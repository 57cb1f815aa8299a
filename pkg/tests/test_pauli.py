import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density
from gmeact.experiment import born_distribution
from gmeact.pauli import (
    PauliString,
    all_words,
    expectation,
    group_settings,
    materialize,
    parity_vector,
    pauli_coefficients,
    reconstruct,
    word_order_key,
)
from gmeact.states import constituent_pair
from gmeact.witness import PAULI_TABLE


def test_pauli_string_validation():
    assert PauliString("xyz").word == "XYZ"
    for bad in ("", "XQ"):
        with pytest.raises(ValueError):
            PauliString(bad)
    assert PauliString("IZZ").is_diagonal and not PauliString("IXZ").is_diagonal


def test_materialize_examples():
    assert np.array_equal(materialize("III"), np.eye(8))
    assert np.array_equal(materialize("ZZ"), np.diag([1, -1, -1, 1]))
    # parity of B1B2C1C2 on |000011>
    assert materialize("IIZZZZ")[0b000011, 0b000011] == 1


@pytest.mark.parametrize("word", ["X", "YZ", "XIY", "ZZYX"])
def test_materialize_hermitian_unitary_traceless(word):
    m = materialize(word)
    assert np.allclose(m, m.conj().T)
    assert np.allclose(m @ m, np.eye(m.shape[0]))
    assert abs(np.trace(m)) < 1e-12


def test_diagonal_parity_identity():
    for word in ("IZZ", "ZIZ", "ZZZ", "IIZ"):
        diag = np.diag(materialize(word)).real
        for b in range(8):
            bits = format(b, "03b")
            sign = np.prod([(-1) ** int(bit) for bit, c in zip(bits, word) if c != "I"])
            assert diag[b] == sign
        assert np.array_equal(parity_vector(word), diag)


def test_coefficients_of_simple_operators():
    assert pauli_coefficients(np.eye(8) / 8) == {"III": 1.0}
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    coeffs = pauli_coefficients(np.outer(phi, phi))
    assert coeffs == pytest.approx({"II": 1.0, "ZZ": 1.0, "XX": 1.0, "YY": -1.0})
    with pytest.raises(ValueError):
        pauli_coefficients(np.array([[0, 1], [0, 0]]))


def test_coefficients_match_brute_force():
    rng = np.random.default_rng(0)
    h = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    h = h + h.conj().T
    fast = pauli_coefficients(h)
    for w in all_words(4):
        assert abs(fast.get(w, 0.0) - np.trace(h @ materialize(w)).real) < 1e-10


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_reconstruction_and_parseval(seed, n):
    rng = np.random.default_rng(seed)
    d = 2**n
    h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = h + h.conj().T
    coeffs = pauli_coefficients(h, tol=0.0)
    assert np.linalg.norm(reconstruct(coeffs, n) - h) < 1e-10
    parseval = sum((m / d) ** 2 for m in coeffs.values()) * d
    assert abs(parseval - np.trace(h @ h).real) < 1e-9


def test_table_order_key():
    words = [w for w, _ in PAULI_TABLE]
    assert words == sorted(words, key=word_order_key)


def test_paper_witness_decomposition(paper_witness):
    coeffs = paper_witness.pauli()
    assert list(coeffs) == [w for w, _ in PAULI_TABLE]
    for word, m in PAULI_TABLE:
        assert abs(coeffs[word] - float(m)) < 1e-9
    assert set(np.round(list(coeffs.values()), 9)) <= {1.0, round(-1 / 3, 9), round(1 / 3, 9)}


def test_group_settings_examples(paper_witness):
    assert [s.basis for s in group_settings(["IIIIII"])] == ["ZZZZZZ"]
    assert len(group_settings(["XXXXXX", "YYYYYY"])) == 2
    assert [s.basis for s in group_settings(["XI", "IY"])] == ["XY"]
    settings_ = group_settings(list(paper_witness.pauli()))
    assert len(settings_) == 17
    assert settings_[0].basis == "ZZZZZZ" and settings_[0].members == list(range(16))
    words = list(paper_witness.pauli())
    for s in settings_:
        assert all(s.covers(words[k]) for k in s.members)
    with pytest.raises(ValueError):
        group_settings(["XX", "XXX"])


def test_expectation():
    rng = np.random.default_rng(1)
    rho = random_density(8, rng)
    assert np.isclose(expectation("III", rho), 1.0)
    assert expectation("Z", np.diag([1.0, 0.0])) == 1.0
    with pytest.raises(ValueError):
        expectation("ZZ", rho)


def test_expectation_matches_born_rule_oracle():
    pair = constituent_pair(0, 0)
    for word in ("XXXXXX", "XXYXYX", "ZZIZZI"):
        basis = word.replace("I", "Z")
        via_born = born_distribution(pair, basis) @ parity_vector(word)
        assert abs(expectation(word, pair) - via_born) < 1e-12


def test_all_words():
    assert len(list(all_words(2))) == 16
    assert list(itertools.islice(all_words(2), 3)) == ["II", "IX", "IY"]
