import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_stochastic
from walklab import tolerances
from walklab.bench import random_reversible
from walklab.chain import validate_chain
from walklab.errors import DimensionCap, DimensionMismatch
from walklab.meter import CostMeter
from walklab.spectral import build_discriminant
from walklab.walk import (EdgeState, apply_controlled_walk, apply_walk, build_walk, edge_vectors, match_phases,
                          pi_state, predicted_phases, verify_walk_spectrum)


def test_two_state_edge_vectors(two_state):
    sq, _ = edge_vectors(two_state)
    np.testing.assert_allclose(sq[0], [math.sqrt(0.9), math.sqrt(0.1)])
    psi = pi_state(two_state)
    assert psi[0] == pytest.approx(math.sqrt(2 / 3) * math.sqrt(0.9))
    assert np.linalg.norm(psi) == pytest.approx(1.0)


def test_two_state_phases_against_direct_eigensolve(two_state):
    w = build_walk(two_state)
    W = w.dense()
    np.testing.assert_allclose(W.conj().T @ W, np.eye(4), atol=1e-12)
    found = np.angle(np.linalg.eigvals(W))
    target = 2 * math.acos(0.7)
    for ph in (target, -target):
        assert np.min(np.abs(np.angle(np.exp(1j * (found - ph))))) < 1e-10
    np.testing.assert_allclose(np.sort(w.eigensystem.phases), [-target, 0.0, target], atol=1e-10)


def test_factored_walk_matches_dense():
    c = validate_chain(random_stochastic(5, np.random.default_rng(3)))
    w = build_walk(c)
    x = np.random.default_rng(0).standard_normal((25, 3))
    np.testing.assert_allclose(w.apply(x), w.dense() @ x, atol=1e-12)
    np.testing.assert_allclose(w.apply(w.apply(x), inverse=True), x, atol=1e-12)


def test_pi_is_fixed():
    c = random_reversible(7, seed=4)
    w = build_walk(c)
    psi = w.pi_state()
    np.testing.assert_allclose(w.apply(psi), psi, atol=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_walk_spectrum_reversible(seed):
    c = random_reversible(4 + seed, seed=seed)
    report = verify_walk_spectrum(build_walk(c), build_discriminant(c))
    assert report["phase_distance"] < 1e-8
    assert report["dim_A_and_B"] == 1
    assert report["dim_A_plus_B"] == 2 * c.n - 1


def test_walk_spectrum_non_reversible_and_degenerate():
    c = validate_chain(random_stochastic(6, np.random.default_rng(11)))
    verify_walk_spectrum(build_walk(c), build_discriminant(c))
    cyc = validate_chain(np.roll(np.eye(5), 1, axis=1))
    report = verify_walk_spectrum(build_walk(cyc), build_discriminant(cyc))
    assert report["dim_A_and_B"] == 5
    comp = validate_chain(np.full((4, 4), 0.25))
    report = verify_walk_spectrum(build_walk(comp), build_discriminant(comp))
    assert report["dim_A_and_Bperp"] == 3 and report["dim_A_plus_B"] == 7


def test_dense_and_coordinate_eigen_routes_agree():
    c = random_reversible(9, seed=2)
    dense = build_walk(c)
    with tolerances.override(dense_eigen_states=0):
        coords = build_walk(c)
        assert coords.eigensystem.route == "coords"
    assert dense.eigensystem.route == "dense"
    assert match_phases(dense.eigensystem.phases, coords.eigensystem.phases) < 1e-9
    x = np.random.default_rng(1).standard_normal(c.n ** 2)
    # projection onto A+B is basis independent
    pd = dense.eig_expand(dense.eig_project(x))
    pc = coords.eig_expand(coords.eig_project(x))
    np.testing.assert_allclose(pd, pc, atol=1e-10)
    with tolerances.override(dense_eigen_states=0):
        verify_walk_spectrum(coords, build_discriminant(c))


def test_eigenvectors_are_eigenvectors():
    c = validate_chain(random_stochastic(5, np.random.default_rng(8), loops=True))
    w = build_walk(c)
    es = w.eigensystem
    for j in range(es.dim):
        v = w.eigenvector(j)
        np.testing.assert_allclose(w.apply(v), np.exp(1j * es.phases[j]) * v, atol=1e-10)


def test_meter_and_controls():
    c = random_reversible(3, seed=0)
    w = build_walk(c)
    m = CostMeter()
    state = EdgeState(pi_state(c).astype(complex), 3)
    out = apply_walk(w, state, m)
    assert isinstance(out, EdgeState) and m.cwalk_calls == 1 and m.update_units == 4
    joint = np.random.default_rng(2).standard_normal((9, 2))
    ctrl = np.array([False, True])
    res = apply_controlled_walk(w, joint, ctrl, m)
    np.testing.assert_allclose(res[:, 0], joint[:, 0])
    np.testing.assert_allclose(res[:, 1], w.apply(joint[:, 1]), atol=1e-12)
    assert m.cwalk_calls == 2
    with pytest.raises(DimensionMismatch):
        apply_controlled_walk(w, joint, np.array([True]))


def test_size_caps():
    c = random_reversible(5, seed=0)
    with tolerances.override(dense_walk_states=4):
        with pytest.raises(DimensionCap):
            build_walk(c).dense()
    with tolerances.override(max_states_quantum=4):
        with pytest.raises(DimensionCap):
            build_walk(c)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 8), seed=st.integers(0, 100_000), loops=st.booleans())
def test_correspondence_property(n, seed, loops):
    c = validate_chain(random_stochastic(n, np.random.default_rng(seed), loops=loops))
    w = build_walk(c)
    predicted, counts = predicted_phases(build_discriminant(c))
    assert w.eigensystem.dim == len(predicted)
    assert match_phases(w.eigensystem.phases, predicted) < 1e-8
    x = np.random.default_rng(seed).standard_normal(n * n)
    assert np.linalg.norm(w.apply(x)) == pytest.approx(np.linalg.norm(x), abs=1e-10)
