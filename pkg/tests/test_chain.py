import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_stochastic
from walklab import tolerances
from walklab.chain import (MarkovChain, classical_search_1, classical_search_2, default_search_lengths,
                           eigenvalue_gap, is_reversible, lazify, marked_set, monte_carlo, stationary_distribution,
                           time_reversal, validate_chain)
from walklab.errors import AlphaOutOfRange, ConvergenceFailure, NonStochasticRow, NotIrreducible


def test_two_state_values(two_state):
    np.testing.assert_allclose(two_state.pi, [2 / 3, 1 / 3], atol=1e-12)
    assert two_state.reversible
    np.testing.assert_allclose(time_reversal(two_state).P, two_state.P, atol=1e-12)
    assert eigenvalue_gap(two_state) == pytest.approx(0.3, abs=1e-12)
    # detailed balance flow 1/15 both ways
    assert two_state.pi[0] * two_state.P[0, 1] == pytest.approx(1 / 15)
    assert two_state.flags() == {"irreducible": True, "aperiodic": True, "reversible": True, "has_self_loops": True}


def test_rejects_bad_rows():
    with pytest.raises(NonStochasticRow):
        validate_chain([[0.5, 0.4], [0.5, 0.5]])
    with pytest.raises(NonStochasticRow):
        validate_chain([[1.2, -0.2], [0.5, 0.5]])
    with pytest.raises(ValueError):
        validate_chain([[1.0, 0.0]])


def test_row_sum_tolerance_renormalizes():
    c = validate_chain([[0.5 + 5e-10, 0.5], [0.5, 0.5]])
    np.testing.assert_allclose(c.P.sum(axis=1), 1.0, atol=1e-15)


def test_reducible_chain():
    P = [[1.0, 0.0], [0.5, 0.5]]
    with pytest.raises(NotIrreducible):
        validate_chain(P)
    c = validate_chain(P, require_irreducible=False)
    assert not c.irreducible
    with pytest.raises(NotIrreducible):
        stationary_distribution(c)


def test_periodicity_from_graph():
    cyc = validate_chain(np.roll(np.eye(5), 1, axis=1))
    assert cyc.irreducible and not cyc.aperiodic and not cyc.has_self_loops
    np.testing.assert_allclose(cyc.pi, np.full(5, 0.2), atol=1e-12)
    # cycles of length 2 and 3 through node 0 make the chain aperiodic without self-loops
    P = np.array([[0, 0.5, 0.5, 0], [1, 0, 0, 0], [0, 0, 0, 1], [1, 0, 0, 0]], float)
    c = validate_chain(P)
    assert c.aperiodic and not c.has_self_loops


def test_matrix_is_read_only(two_state):
    with pytest.raises(ValueError):
        two_state.P[0, 0] = 0.5


def test_power_iteration_fallback(monkeypatch, two_state):
    # a poisoned eigensolver forces the lazy power iteration route
    monkeypatch.setattr(np.linalg, "eig", lambda a: (np.zeros(a.shape[0]), np.eye(a.shape[0])))
    pi = stationary_distribution(validate_chain(two_state.P))
    np.testing.assert_allclose(pi, [2 / 3, 1 / 3], atol=1e-9)


def test_convergence_failure(monkeypatch, two_state):
    monkeypatch.setattr(np.linalg, "eig", lambda a: (np.zeros(a.shape[0]), np.eye(a.shape[0])))
    with pytest.raises(ConvergenceFailure):
        stationary_distribution(validate_chain(two_state.P), max_iter=1)


def test_lazify(two_state):
    lz = lazify(two_state, 0.5)
    np.testing.assert_allclose(lz.P, 0.5 * np.eye(2) + 0.5 * two_state.P)
    np.testing.assert_allclose(lz.pi, two_state.pi)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(AlphaOutOfRange):
            lazify(two_state, bad)


def test_non_reversible_reversal():
    P = np.array([[0.1, 0.6, 0.3], [0.3, 0.1, 0.6], [0.6, 0.3, 0.1]])
    c = validate_chain(P)
    assert not c.reversible
    rev = time_reversal(c)
    np.testing.assert_allclose(rev.P, P.T, atol=1e-12)  # doubly stochastic, pi uniform
    np.testing.assert_allclose(time_reversal(rev).P, P, atol=1e-12)
    assert is_reversible(c, tol=1.0)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 9), seed=st.integers(0, 10_000), loops=st.booleans())
def test_stationary_and_reversal_properties(n, seed, loops):
    c = validate_chain(random_stochastic(n, np.random.default_rng(seed), loops=loops))
    pi = c.pi
    assert abs(pi.sum() - 1) < 1e-12 and np.all(pi > 0)
    assert np.max(np.abs(pi @ c.P - pi)) <= tolerances.TOL.spectral
    rev = time_reversal(c)
    np.testing.assert_allclose(rev.P.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(rev.pi, pi)
    assert c.reversible == bool(np.allclose(rev.P, c.P, atol=1e-10, rtol=0))
    assert 0.0 <= eigenvalue_gap(c) <= 2.0


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 8), seed=st.integers(0, 10_000))
def test_symmetric_weights_are_reversible(n, seed):
    rng = np.random.default_rng(seed)
    W = rng.random((n, n)) + np.roll(np.eye(n), 1, axis=1)
    W = W + W.T
    c = validate_chain(W / W.sum(axis=1, keepdims=True))
    assert c.reversible
    np.testing.assert_allclose(c.pi, W.sum(axis=1) / W.sum(), atol=1e-12)


def complete(n):
    return validate_chain(np.full((n, n), 1.0 / n))


def test_marked_set_epsilon():
    c = complete(10)
    m = marked_set(c, [0, 3])
    assert m.epsilon == pytest.approx(0.2)
    assert 3 in m and 4 not in m and len(m) == 2
    with pytest.raises(ValueError):
        marked_set(c, [10])


def test_search_1_empty_marked():
    c = complete(10)
    r = classical_search_1(c, [], t1=2, t2=7, rng_seed=1)
    assert r.found is None and r.check_count == 7 and r.steps_taken == 14 and r.setup_count == 1


def test_search_1_finds_with_long_budget():
    c = complete(10)
    runs = monte_carlo(classical_search_1, c, [0], range(10_000), t1=1, t2=100)
    rate = np.mean([r.found is not None for r in runs])
    assert rate >= 0.99
    assert all(r.found == 0 for r in runs if r.found is not None)


def test_search_2_accounting():
    c = complete(4)
    r = classical_search_2(c, [], t=25, rng_seed=3)
    assert (r.found, r.check_count, r.steps_taken, r.update_count) == (None, 25, 25, 25)
    r = classical_search_2(c, [0, 1, 2, 3], t=5, rng_seed=3)
    assert r.found is not None and r.check_count == 1 and r.steps_taken == 0


def test_searches_are_seed_deterministic():
    c = validate_chain(random_stochastic(6, np.random.default_rng(0)))
    a = classical_search_2(c, [5], t=50, rng_seed=9)
    b = classical_search_2(c, [5], t=50, rng_seed=9)
    assert a == b
    assert classical_search_1(c, [5], 2, 9, rng_seed=4) == classical_search_1(c, [5], 2, 9, rng_seed=4)


def test_search_parameters_validated():
    c = complete(3)
    with pytest.raises(ValueError):
        classical_search_1(c, [0], 0, 3)
    with pytest.raises(ValueError):
        classical_search_2(c, [0], 0)


def test_default_lengths():
    assert default_search_lengths(0.3, 0.1) == {"t1": 4, "t2": 20, "t": 100}
    assert default_search_lengths(1.0, 0.5) == {"t1": 1, "t2": 4, "t": 6}


def test_chain_dataclass_is_frozen(two_state):
    assert isinstance(two_state, MarkovChain)
    with pytest.raises(Exception):
        two_state.irreducible = False
    assert two_state.n == 2
