import pathlib

import numpy as np
import pytest

from probclone.problem import CloningProblem, StateSet

DATA = pathlib.Path(__file__).parent / "data"
OMEGA = np.exp(2j * np.pi / 3)

#: Q of the symmetric three-state identification: largest root of q^3 - q + 1/3.
Q_SYMMETRIC = 2 * np.cos(np.radians(50)) / np.sqrt(3)
#: The smaller positive root, which is not realizable.
Q_SECOND_ROOT = 2 * np.cos(np.radians(70)) / np.sqrt(3)

ACCEPTANCE_LINES = []


def symmetric_states():
    return np.array([[1, 1, 1], [1, 1, OMEGA], [1, OMEGA, OMEGA]]) / np.sqrt(3)


def counterexample_states():
    r = 1 / np.sqrt(3)
    return np.array([[1, 0, 0], [0, 1, 0], [r, r, r]], dtype=complex)


def random_states(rng, N, dim=None):
    dim = dim or N
    v = rng.normal(size=(N, dim)) + 1j * rng.normal(size=(N, dim))
    return v / np.linalg.norm(v, axis=1)[:, None]


def random_alpha(rng, N):
    k = rng.integers(1, N + 1)
    a = rng.normal(size=(N, k)) + 1j * rng.normal(size=(N, k))
    a /= np.linalg.norm(a, axis=1)[:, None]
    A = a.conj() @ a.T
    A = 0.5 * (A + A.conj().T)
    A[np.diag_indices(N)] = 1.0
    return A


def random_problem(rng, N, identification=False, max_n=3):
    m = int(rng.integers(1, 3))
    n = int(rng.integers(m + 1, max(m + 2, max_n + 1)))
    alpha = None if identification else random_alpha(rng, N)
    priors = rng.dirichlet(np.ones(N))
    priors = priors / priors.sum()
    return CloningProblem(StateSet(N, random_states(rng, N)), m=m, n=n, alpha=alpha, priors=priors)


@pytest.fixture
def symmetric_problem():
    return CloningProblem(StateSet(3, symmetric_states()))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
