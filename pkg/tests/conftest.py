import numpy as np
import pytest

from riccati_qubit import EnvironmentPair

ACCEPTANCE_LINES: list[str] = []


def random_hermitian(rng, d, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / 2


def random_real_symmetric(rng, d, scale=1.0):
    a = rng.normal(size=(d, d))
    return scale * (a + a.T) / 2


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(rng, d, rank=None):
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_commuting_env(rng, d, h_range=(-2, 2), v_range=(-1, 1)):
    u = random_unitary(rng, d)
    e = rng.uniform(*h_range, size=d)
    v = rng.uniform(*v_range, size=d)
    return EnvironmentPair(u @ np.diag(e) @ u.conj().T, u @ np.diag(v) @ u.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(20100228)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
