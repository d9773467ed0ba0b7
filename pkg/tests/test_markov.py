import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluctuator_qaoa.markov import (
    FluctuatorChain,
    all_realization_probabilities,
    correlation_time,
    correlator,
    enumerate_realizations,
    marginal_excitation,
    realization_prob_derivative_at_zero,
    realization_probability,
    sample_realization,
    transition_matrix,
    transition_power,
)

probabilities = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def test_transition_matrix_kappa_one_is_identity():
    np.testing.assert_allclose(transition_matrix(0.37, 1.0), np.eye(2), atol=0)


def test_transition_matrix_kappa_zero_resets():
    t = transition_matrix(0.37, 0.0)
    np.testing.assert_allclose(t[:, 0], [0.63, 0.37], atol=1e-15)
    np.testing.assert_allclose(t[:, 1], [0.63, 0.37], atol=1e-15)


def test_transition_matrix_entry_matches_keep_or_reset_rule():
    assert transition_matrix(0.3, 0.5)[1, 1] == pytest.approx(0.65, abs=1e-15)


@pytest.mark.parametrize("bad", [-0.1, 1.1, 2.0])
def test_transition_matrix_rejects_bad_probabilities(bad):
    with pytest.raises(ValueError):
        transition_matrix(bad, 0.5)
    with pytest.raises(ValueError):
        transition_matrix(0.5, bad)


def test_transition_power_is_identity_at_zero():
    np.testing.assert_allclose(transition_power(0.3, 0.0, 0), np.eye(2), atol=0)
    np.testing.assert_allclose(transition_power(0.3, 1.0, 0), np.eye(2), atol=0)


def test_transition_power_one_step_matches_matrix():
    np.testing.assert_allclose(
        transition_power(0.3, 0.5, 1), transition_matrix(0.3, 0.5), atol=1e-15
    )


def test_transition_power_matches_repeated_multiplication():
    t = transition_matrix(0.2, 0.5)
    np.testing.assert_allclose(
        transition_power(0.2, 0.5, 3), t @ t @ t, atol=1e-14
    )


@given(probabilities, probabilities, st.integers(min_value=0, max_value=12))
@settings(max_examples=60, deadline=None)
def test_transition_power_properties(p, kappa, t):
    power = transition_power(p, kappa, t)
    # column stochastic
    np.testing.assert_allclose(power.sum(axis=0), [1.0, 1.0], atol=1e-14)
    # steady state is fixed
    steady = np.array([1.0 - p, p])
    np.testing.assert_allclose(power @ steady, steady, atol=1e-14)
    # matches repeated multiplication
    expected = np.linalg.matrix_power(transition_matrix(p, kappa), t)
    np.testing.assert_allclose(power, expected, atol=1e-13)


@given(probabilities, probabilities, st.integers(0, 6), st.integers(0, 6))
@settings(max_examples=40, deadline=None)
def test_transition_power_semigroup(p, kappa, t1, t2):
    np.testing.assert_allclose(
        transition_power(p, kappa, t1 + t2),
        transition_power(p, kappa, t1) @ transition_power(p, kappa, t2),
        atol=1e-13,
    )


def test_correlation_time_examples():
    assert correlation_time(np.exp(-1.0)) == pytest.approx(1.0, abs=1e-14)
    assert correlation_time(0.0) == 0.0
    assert correlation_time(1.0) == np.inf


def _enumerated_correlator(p, kappa, dt):
    chain = FluctuatorChain(p, kappa)
    length = dt + 1
    bits = enumerate_realizations(length)
    probs = all_realization_probabilities(chain, length)
    e_joint = probs[(bits[:, 0] == 1) & (bits[:, dt] == 1)].sum()
    return e_joint - p * p


def test_correlator_zero_lag_is_bernoulli_variance():
    assert correlator(0.3, 0.5, 0) == pytest.approx(0.3 * 0.7, abs=1e-15)
    assert correlator(0.3, 0.5, 0) == pytest.approx(
        _enumerated_correlator(0.3, 0.5, 0), abs=1e-14
    )


def test_correlator_matches_enumeration():
    # p(1-p) kappa^2 = 0.0525; exhaustive enumeration over length-3 strings
    assert correlator(0.3, 0.5, 2) == pytest.approx(0.0525, abs=1e-15)
    assert correlator(0.3, 0.5, 2) == pytest.approx(
        _enumerated_correlator(0.3, 0.5, 2), abs=1e-14
    )


def test_correlator_iid_vanishes():
    assert correlator(0.3, 0.0, 1) == 0.0


@given(probabilities, st.floats(1e-6, 1.0), st.integers(1, 10))
@settings(max_examples=40, deadline=None)
def test_correlator_decay_ratio(p, kappa, dt):
    base = correlator(p, kappa, 0)
    assert correlator(p, kappa, dt) == pytest.approx(base * kappa**dt, abs=1e-14)


def test_realization_probability_examples():
    m = 7
    chain = FluctuatorChain(0.3, 0.0)
    assert realization_probability(chain, [0] * (m + 1)) == pytest.approx(
        0.7 ** (m + 1), abs=1e-15
    )
    chain = FluctuatorChain(0.3, 1.0)
    assert realization_probability(chain, [1] * (m + 1)) == pytest.approx(
        0.3, abs=1e-15
    )


@given(probabilities, probabilities, st.integers(1, 8))
@settings(max_examples=40, deadline=None)
def test_realization_probabilities_normalize(p, kappa, length):
    chain = FluctuatorChain(p, kappa)
    assert all_realization_probabilities(chain, length).sum() == pytest.approx(
        1.0, abs=1e-12
    )


def test_realization_probability_sum_length_five():
    chain = FluctuatorChain(0.42, 0.37)
    total = sum(
        realization_probability(chain, bits) for bits in enumerate_realizations(5)
    )
    assert total == pytest.approx(1.0, abs=1e-12)


def test_marginal_excitation_is_p_independent_of_t_and_kappa():
    assert marginal_excitation(FluctuatorChain(0.3, 0.7), 6, 3) == pytest.approx(
        0.3, abs=1e-12
    )
    assert marginal_excitation(FluctuatorChain(0.0, 0.5), 4, 2) == 0.0
    assert marginal_excitation(FluctuatorChain(1.0, 0.5), 4, 2) == pytest.approx(
        1.0, abs=1e-12
    )


def test_marginal_excitation_rejects_oversized_enumeration():
    with pytest.raises(ValueError):
        marginal_excitation(FluctuatorChain(0.3, 0.5), 25, 0)


@pytest.mark.parametrize("kappa", [0.0, 0.4, 1.0])
@pytest.mark.parametrize("length", [1, 5, 12])
def test_expected_excitation_count(kappa, length):
    # E[sum_t B_t] over slots 0..length-1 equals length * p for every kappa.
    p = 0.31
    chain = FluctuatorChain(p, kappa)
    bits = enumerate_realizations(length)
    probs = all_realization_probabilities(chain, length)
    assert probs @ bits.sum(axis=1) == pytest.approx(length * p, abs=1e-12)


def test_derivative_all_zero_string():
    for kappa in (0.0, 0.3, 1.0):
        m = 6
        got = realization_prob_derivative_at_zero(kappa, m, [0] * (m + 1))
        assert got == pytest.approx(-(m * (1 - kappa) + 1), abs=1e-15)


def test_derivative_at_kappa_zero():
    assert realization_prob_derivative_at_zero(0.0, 4, [0, 0, 1, 0, 0]) == 1.0
    assert realization_prob_derivative_at_zero(0.0, 4, [0, 1, 0, 1, 0]) == 0.0


def test_derivative_run_weights():
    # run of length 2 with both ends interior: (1-kappa)^2 kappa
    got = realization_prob_derivative_at_zero(0.5, 4, [0, 1, 1, 0, 0])
    assert got == pytest.approx(0.25 * 0.5, abs=1e-15)
    # run touching the start: one boundary factor drops
    got = realization_prob_derivative_at_zero(0.5, 4, [1, 1, 0, 0, 0])
    assert got == pytest.approx(0.5 * 0.5, abs=1e-15)


@given(probabilities, st.integers(1, 8))
@settings(max_examples=30, deadline=None)
def test_derivative_sums_to_zero(kappa, m):
    total = sum(
        realization_prob_derivative_at_zero(kappa, m, bits)
        for bits in enumerate_realizations(m + 1)
    )
    assert total == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kappa", [0.0, 0.3, 1.0])
def test_derivative_matches_finite_difference(kappa):
    # one-sided difference at p=0 (p must stay nonnegative)
    rng = np.random.default_rng(5)
    eps = 1e-7
    for m in (1, 3, 8):
        for _ in range(10):
            bits = rng.integers(0, 2, m + 1)
            plus = realization_probability(FluctuatorChain(eps, kappa), bits)
            zero = realization_probability(FluctuatorChain(0.0, kappa), bits)
            fd = (plus - zero) / eps
            exact = realization_prob_derivative_at_zero(kappa, m, bits)
            assert fd == pytest.approx(exact, abs=1e-6)


def test_sample_realization_degenerate():
    rng = np.random.default_rng(0)
    assert not sample_realization(FluctuatorChain(0.0, 0.5), 8, rng).any()
    assert sample_realization(FluctuatorChain(1.0, 0.5), 8, rng).all()


def test_sample_realization_frequencies_match_probabilities():
    # 10^6 draws: every length-4 realization within 4 sigma of its probability
    chain = FluctuatorChain(0.3, 0.5)
    rng = np.random.default_rng(123)
    draws = 1_000_000
    counts = np.zeros(16, dtype=np.int64)
    for _ in range(draws):
        bits = sample_realization(chain, 4, rng)
        counts[int("".join(map(str, bits)), 2)] += 1
    probs = all_realization_probabilities(chain, 4)
    for code in range(16):
        sigma = np.sqrt(draws * probs[code] * (1 - probs[code]))
        assert abs(counts[code] - draws * probs[code]) <= 4 * sigma
