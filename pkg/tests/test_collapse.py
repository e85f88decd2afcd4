import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nosignal.collapse import (
    DiscreteBipartite,
    alice_marginal,
    aperture_region,
    averaged_bob_after_alice,
    bob_conditional,
    bob_marginal,
    collapse_on_alice,
    project_aperture,
    sample_joint,
)
from nosignal.dynamics import SlitScreen, default_barrier_height, free_propagate, split_step
from nosignal.exceptions import ZeroProbabilityOutcome
from nosignal.lattice import make_grid, transform_matrix
from nosignal.marginals import particle2_distribution, position_marginal

BELL = DiscreteBipartite(np.array([[1, 0], [0, 1]]) / math.sqrt(2))


def brute_bob(a):
    d1, d2 = a.shape
    out = [0.0] * d2
    for j in range(d2):
        for i in range(d1):
            out[j] += abs(a[i, j]) ** 2
    return np.array(out)


def test_bell_marginal():
    np.testing.assert_allclose(bob_marginal(BELL), [0.5, 0.5], atol=1e-15)


def test_product_state_marginal():
    b = np.array([0.6, 0.8j])
    c = np.array([1, 1j, -1]) / math.sqrt(3)
    s = DiscreteBipartite.product(b, c)
    np.testing.assert_allclose(bob_marginal(s), np.abs(c) ** 2, atol=1e-15)


def test_random_marginal_matches_double_loop():
    s = DiscreteBipartite.random(3, 4, seed=2)
    np.testing.assert_allclose(bob_marginal(s), brute_bob(s.coefficients), atol=1e-14)
    assert bob_marginal(s).sum() == pytest.approx(1.0, abs=1e-12)


def test_rejects_unnormalized():
    with pytest.raises(ValueError):
        DiscreteBipartite(np.ones((2, 2)))
    with pytest.raises(ValueError):
        DiscreteBipartite(np.ones(4) / 2)


def test_bell_collapse():
    o = collapse_on_alice(BELL, 0)
    assert o.probability == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(o.bob_conditional, [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(o.post_state.coefficients, [[1, 0], [0, 0]], atol=1e-15)


def test_product_collapse_has_no_back_action():
    b = np.array([1, 2, 2j]) / 3
    c = np.array([0.6, 0.8])
    s = DiscreteBipartite.product(b, c)
    for i in range(3):
        np.testing.assert_allclose(collapse_on_alice(s, i).bob_conditional, np.abs(c) ** 2, atol=1e-14)


def test_zero_probability_outcome():
    s = DiscreteBipartite(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ZeroProbabilityOutcome):
        collapse_on_alice(s, 1)
    with pytest.raises(ZeroProbabilityOutcome):
        bob_conditional(s, 1)
    with pytest.raises(IndexError):
        collapse_on_alice(s, 2)
    np.testing.assert_allclose(averaged_bob_after_alice(s), [1.0, 0.0])


def test_random_3x3_outcome_average():
    s = DiscreteBipartite.random(3, 3, seed=5)
    total = np.zeros(3)
    for i in range(3):
        o = collapse_on_alice(s, i)
        assert o.probability == pytest.approx(np.sum(np.abs(s.coefficients[i]) ** 2), abs=1e-14)
        np.testing.assert_allclose(o.bob_conditional,
                                   np.abs(s.coefficients[i]) ** 2 / np.sum(np.abs(s.coefficients[i]) ** 2), atol=1e-14)
        total += o.probability * o.bob_conditional
    np.testing.assert_allclose(total, bob_marginal(s), atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_order_independence_property(d1, d2, seed):
    s = DiscreteBipartite.random(d1, d2, seed)
    np.testing.assert_allclose(averaged_bob_after_alice(s), bob_marginal(s), atol=1e-14)
    np.testing.assert_allclose(alice_marginal(s).sum(), 1.0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_collapse_idempotent(d1, d2, seed):
    s = DiscreteBipartite.random(d1, d2, seed)
    i = int(np.argmax(alice_marginal(s)))
    once = collapse_on_alice(s, i)
    twice = collapse_on_alice(once.post_state, i)
    assert twice.probability == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(twice.post_state.coefficients, once.post_state.coefficients, atol=1e-14)


def test_sampling_bell_has_no_off_diagonal_counts():
    counts = sample_joint(BELL, seed=1, n_pairs=100_000)
    assert counts[0, 1] == 0 and counts[1, 0] == 0
    assert counts.sum() == 100_000


def test_sampling_within_binomial_bounds():
    n = 100_000
    for seed in range(5):
        s = DiscreteBipartite.random(4, 5, seed)
        counts = sample_joint(s, seed=seed + 100, n_pairs=n)
        p = bob_marginal(s)
        bound = 4 * np.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts.sum(axis=0) - n * p) <= bound)


def test_sampling_deterministic():
    s = DiscreteBipartite.random(3, 3, 0)
    np.testing.assert_array_equal(sample_joint(s, 42, 1000), sample_joint(s, 42, 1000))
    with pytest.raises(ValueError):
        sample_joint(s, 42, 0)


# -- lattice states ---------------------------------------------------------------


def test_full_aperture_is_trivial(epr64):
    p, post = project_aperture(epr64, np.ones(64, bool))
    assert p == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(post.psi, epr64.psi, atol=1e-14)


def test_region_and_complement(epr64, grid64):
    mask = aperture_region(grid64, 1.0, 0.7)
    p_in, post = project_aperture(epr64, mask)
    p_out, _ = project_aperture(epr64, ~mask)
    assert p_in + p_out == pytest.approx(1.0, abs=1e-12)
    assert post.norm == pytest.approx(1.0, abs=1e-12)
    assert np.all(position_marginal(post, 1)[~mask] == 0)
    p_idx, _ = project_aperture(epr64, np.flatnonzero(mask))
    assert p_idx == p_in


def test_empty_region_rejected(epr64):
    with pytest.raises(ValueError):
        project_aperture(epr64, np.zeros(64, bool))


def _oracle_conditional(state, mask):
    """Explicit projector matrix and dense transform; no FFT."""
    g = state.grid
    P = np.diag(mask.astype(float))
    T = transform_matrix(g)
    kept = P @ state.psi
    kept /= np.sqrt(np.sum(np.abs(kept) ** 2) * g.node_spacing**2)
    phi = (T @ kept @ T.T) * g.spectral_scale**2
    return np.sum(np.abs(phi) ** 2, axis=0) * g.wavenumber_spacing


def test_conditioning_fresh_or_free_pair_leaves_bob_unchanged(epr64, grid64):
    # psi depends on y1 - y2 only, so every y1 row carries the same k2 spectrum
    mask = aperture_region(grid64, 0.0, 2 * grid64.node_spacing)
    for state in (epr64, free_propagate(epr64, 3.0)):
        _, post = project_aperture(state, mask)
        D_cond = particle2_distribution(post).values
        np.testing.assert_allclose(D_cond, _oracle_conditional(state, mask), atol=1e-12)
        np.testing.assert_allclose(D_cond, particle2_distribution(state).values, atol=1e-12)


def test_narrow_aperture_after_slit_changes_conditional(epr64, grid64):
    g = grid64
    dy = g.node_spacing
    state = split_step(epr64, SlitScreen(0.0, 4 * dy, default_barrier_height(g), 4 * dy).as_operation(g), 2.0, 200)
    mask = aperture_region(g, 0.0, 2 * dy)
    _, post = project_aperture(state, mask)
    D_cond = particle2_distribution(post).values
    oracle = _oracle_conditional(state, mask)
    np.testing.assert_allclose(D_cond, oracle, atol=1e-12)
    D = particle2_distribution(state).values
    assert 0.5 * np.sum(np.abs(oracle - D)) * g.wavenumber_spacing > 0.01


def test_partition_average_reproduces_marginal(epr64, grid64):
    g = grid64
    labels = np.arange(64) // 7
    D = particle2_distribution(epr64).values
    avg = np.zeros(64)
    for lab in np.unique(labels):
        p, post = project_aperture(epr64, labels == lab)
        avg += p * particle2_distribution(post).values
    np.testing.assert_allclose(avg, D, atol=1e-12)
