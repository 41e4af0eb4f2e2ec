import numpy as np
import pytest

from walklab.chain import validate_chain

# (criterion, passed, detail) rows collected by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def two_state():
    return validate_chain([[0.9, 0.1], [0.2, 0.8]])


def random_stochastic(n, rng, density=0.6, loops=False):
    """Random row-stochastic matrix whose support contains a directed ring."""
    W = rng.random((n, n)) * (rng.random((n, n)) < density)
    W += np.roll(np.eye(n), 1, axis=1)
    if loops:
        W += np.diag(0.2 + rng.random(n))
    return W / W.sum(axis=1, keepdims=True)
