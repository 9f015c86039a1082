import numpy as np
import pytest

from jacobispec.model import custom


def dense_eigs(T):
    return np.linalg.eigvalsh(T.dense())


def random_block_family(rng, d, name="rand"):
    """Family with random Hermitian B_n and well-conditioned random A_n (table-backed)."""
    n_max = 200
    A = (rng.standard_normal((n_max, d, d)) + 1j * rng.standard_normal((n_max, d, d))) * 0.7
    A += 1.5 * np.eye(d)
    X = rng.standard_normal((n_max, d, d)) + 1j * rng.standard_normal((n_max, d, d))
    B = 0.5 * (X + X.conj().transpose(0, 2, 1)) * 2.0
    return custom(name, d, lambda n: (A[n - 1], B[n - 1]), max_index=n_max)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
