import numpy as np
import pytest

from gmeact import witness
from gmeact.states import n_copy_state

# acceptance results, filled in by test_acceptance.py and echoed at the end of the run
ACCEPTANCE = {}


def record(criterion, passed, detail):
    line = f"{criterion} {'PASS' if passed else 'FAIL'}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
            terminalreporter.write_line(ACCEPTANCE[key])


@pytest.fixture(scope="session")
def paper_witness():
    return witness.load_paper_witness()


@pytest.fixture(scope="session")
def rho2_q0():
    return n_copy_state(0.0, 2)


@pytest.fixture(scope="session")
def sdp_witness_q0(rho2_q0):
    """The two-copy witness found by the embedded solver at q = 0 (about 5 s)."""
    return witness.solve(witness.build_problem(rho2_q0))


def random_density(d, rng, rank=None):
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_ket(d, rng):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)
