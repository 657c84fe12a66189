import numpy as np
import pytest

from qherm.lattice import ChainSpec

ACCEPTANCE_LINES = []


def random_real_chain(rng, n):
    """Real chain with entries uniform in [-2, 2]; each bond resampled until alpha*beta > 0."""
    alpha = np.empty(n - 1)
    beta = np.empty(n - 1)
    for j in range(n - 1):
        while True:
            a, b = rng.uniform(-2, 2, size=2)
            if a * b > 0:
                break
        alpha[j], beta[j] = a, b
    omega = rng.uniform(-2, 2, size=n)
    return ChainSpec(n, alpha, beta, omega)


def real_corpus(count=500, seed=20261014):
    rng = np.random.default_rng(seed)
    return [random_real_chain(rng, int(rng.integers(2, 13))) for _ in range(count)]


@pytest.fixture(scope="session")
def corpus():
    return real_corpus()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
