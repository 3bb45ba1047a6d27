import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skyadmit.model import Action, Event, REQUEST_EVENTS, State
from skyadmit.policy import (ParamVector, SigmoidPolicy, ThresholdPolicy, extract_thresholds,
                             greedy, sample_action, score)

thetas = st.floats(-20, 20, allow_nan=False)
energies = st.integers(0, 10)
requests = st.sampled_from(REQUEST_EVENTS)


def test_accept_probability_examples():
    pol = SigmoidPolicy((1, 1, 1))
    assert pol.accept_probability(1, Event.GROUND) == 0.5
    pol = SigmoidPolicy((0, 4.3448, 0))
    expected = 1 / (1 + math.exp(1.5 * (4.3448 - 10)))
    assert pol.accept_probability(10, Event.GROUND) == pytest.approx(expected, rel=1e-15)
    assert pol.accept_probability(10, Event.GROUND) == pytest.approx(0.99979, abs=1e-5)


def test_accept_probability_limits():
    assert SigmoidPolicy((1e300, 0, 0)).accept_probability(5, Event.BALLOON) == 0.0
    assert SigmoidPolicy((-1e300, 0, 0)).accept_probability(5, Event.BALLOON) == 1.0


def test_energy_event_has_no_accept_decision():
    with pytest.raises(ValueError):
        SigmoidPolicy((1, 1, 1)).accept_probability(3, Event.ENERGY)


def test_action_distribution_examples():
    assert greedy().action_distribution(State(0, Event.BALLOON)) == (0.0, 1.0)
    assert greedy().action_distribution(State(1, Event.SATELLITE)) == (1.0, 0.0)
    assert SigmoidPolicy((1, 1, 1)).action_distribution(State(1, Event.GROUND)) == (0.5, 0.5)
    assert SigmoidPolicy((1, 1, 1)).action_distribution(State(4, Event.ENERGY)) == (1.0, 0.0)
    fixed = ThresholdPolicy((1, 5, 2))
    assert fixed.action_distribution(State(4, Event.GROUND)) == (0.0, 1.0)
    assert fixed.action_distribution(State(5, Event.GROUND)) == (1.0, 0.0)


class _Fixed(SigmoidPolicy):
    def action_distribution(self, state):
        return (0.7, 0.3)


def test_sample_action_inverse_cdf():
    pol = _Fixed((0, 0, 0))
    s = State(3, Event.BALLOON)
    assert sample_action(pol, s, 0.69) == Action.ACCEPT
    assert sample_action(pol, s, 0.70) == Action.REJECT
    for u in (0.0, 0.5, 0.999999):
        assert sample_action(greedy(), State(2, Event.GROUND), u) == Action.ACCEPT


def test_score_example():
    g = score(SigmoidPolicy((1, 1, 1)), State(1, Event.BALLOON), Action.ACCEPT)
    np.testing.assert_array_equal(g, [-0.75, 0.0, 0.0])
    np.testing.assert_array_equal(score(SigmoidPolicy((1, 2, 3)), State(4, Event.ENERGY), Action.ACCEPT),
                                  np.zeros(3))


def _log_mu(theta, state, action):
    # log of the logistic acceptance curve, written out directly
    z = 1.5 * (theta[state.event] - state.energy)
    return -np.logaddexp(0.0, z if action == Action.ACCEPT else -z)


def test_score_matches_finite_differences():
    rng = np.random.default_rng(7)
    h = 1e-5
    for _ in range(100):
        theta = rng.uniform(-3, 10, 3)
        e = int(rng.integers(0, 11))
        x = Event(int(rng.integers(0, 3)))
        for a in Action:
            s = State(e, x)
            g = score(SigmoidPolicy(theta), s, a)
            fd = np.array([(_log_mu(theta + h * d, s, a) - _log_mu(theta - h * d, s, a)) / (2 * h)
                           for d in np.eye(3)])
            assert np.abs(g - fd).max() <= 1e-6 * max(np.abs(fd).max(), 1e-3)


@given(st.tuples(thetas, thetas, thetas), energies, st.sampled_from(list(Event)))
def test_normalization_and_score_identity(theta, e, x):
    pol = SigmoidPolicy(theta)
    s = State(e, x)
    p_acc, p_rej = pol.action_distribution(s)
    assert p_acc >= 0 and p_rej >= 0
    assert p_acc + p_rej == 1.0
    mean_score = p_acc * score(pol, s, Action.ACCEPT) + p_rej * score(pol, s, Action.REJECT)
    assert np.abs(mean_score).max() <= 1e-12


@given(st.floats(-5, 15), st.integers(0, 9), requests)
def test_monotone_in_energy(theta, e, x):
    pol = SigmoidPolicy((theta,) * 3)
    lo, hi = pol.accept_probability(e, x), pol.accept_probability(e + 1, x)
    assert hi > lo or hi == lo == 1.0 or hi == lo == 0.0


@given(st.floats(-5, 15), st.floats(1e-3, 1.0), energies, requests)
def test_monotone_in_theta(theta, delta, e, x):
    p1 = SigmoidPolicy((theta,) * 3).accept_probability(e, x)
    p2 = SigmoidPolicy((theta + delta,) * 3).accept_probability(e, x)
    assert p2 < p1


def test_extract_thresholds_examples():
    assert extract_thresholds(ParamVector(-1.5577, 4.3448, 1.7029), 10) == (1, 5, 2)
    assert extract_thresholds((1, 1, 1), 10) == (1, 1, 1)
    assert extract_thresholds((110, 0, 0), 10)[0] == 11


@given(st.tuples(thetas, thetas, thetas), st.floats(-1, 1))
@settings(max_examples=200)
def test_extract_thresholds_stable_under_small_perturbation(theta, frac):
    theta = np.array(theta)
    gaps = np.abs(theta - np.round(theta))
    margin = gaps.min()
    if margin < 1e-6:
        return
    moved = theta + frac * 0.99 * margin
    assert extract_thresholds(theta, 10) == extract_thresholds(moved, 10)


def test_extract_thresholds_consistent_with_half_probability():
    rng = np.random.default_rng(3)
    for _ in range(200):
        theta = rng.uniform(-3, 13, 3)
        pol = SigmoidPolicy(theta)
        for x, t in zip(REQUEST_EVENTS, extract_thresholds(theta, 10)):
            first = next((e for e in range(1, 11) if pol.accept_probability(e, x) >= 0.5), 11)
            assert t == first


def test_param_vector_rejects_nonfinite():
    with pytest.raises(ValueError):
        ParamVector(float("nan"), 0, 0)
