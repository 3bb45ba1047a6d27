import itertools

import numpy as np
import pytest

from skyadmit.model import (Action, Event, ModelParams, State, apply_transition,
                            event_distribution, immediate_reward, uniformization_constant)


@pytest.mark.parametrize("rates, expected", [
    ((60, 70, 10, 110), 250),
    ((1, 1, 1, 1), 4),
    ((60, 70, 10, 90), 230),
])
def test_uniformization_constant(rates, expected):
    params = ModelParams(rate_balloon=rates[0], rate_ground=rates[1],
                         rate_satellite=rates[2], rate_energy=rates[3])
    assert uniformization_constant(params) == expected


def test_event_distribution_defaults(base):
    probs = event_distribution(base)
    # 60/250, 70/250, 10/250, 110/250
    np.testing.assert_allclose(probs, [0.24, 0.28, 0.04, 0.44], atol=1e-15)
    assert probs.sum() == 1.0


def test_event_distribution_symmetric_and_limit():
    eq = ModelParams(rate_balloon=3, rate_ground=3, rate_satellite=3, rate_energy=3)
    np.testing.assert_allclose(event_distribution(eq), [0.25] * 4)
    heavy = ModelParams(rate_balloon=1, rate_ground=1, rate_satellite=1, rate_energy=1e6)
    assert event_distribution(heavy)[Event.ENERGY] == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("rates", [(0.3, 7.0, 11.0, 0.1), (1e-3, 1e3, 2.5, 17.0), (60, 70, 10, 110)])
def test_event_distribution_sums_exactly(rates):
    params = ModelParams(rate_balloon=rates[0], rate_ground=rates[1],
                         rate_satellite=rates[2], rate_energy=rates[3])
    probs = event_distribution(params)
    assert (probs >= 0).all()
    assert probs.sum() == 1.0


def test_immediate_reward_examples(base):
    assert immediate_reward(State(5, Event.BALLOON), Action.ACCEPT, base) == 5
    assert immediate_reward(State(5, Event.GROUND), Action.REJECT, base) == 0
    assert immediate_reward(State(0, Event.SATELLITE), Action.ACCEPT, base) == 0


def test_apply_transition_examples(base):
    E = base.battery_capacity
    assert apply_transition(State(3, Event.BALLOON), Action.ACCEPT, False, base) == 2
    assert apply_transition(State(E, Event.ENERGY), Action.ACCEPT, True, base) == E
    assert apply_transition(State(0, Event.GROUND), Action.ACCEPT, False, base) == 0
    assert apply_transition(State(4, Event.ENERGY), Action.ACCEPT, True, base) == 5
    assert apply_transition(State(4, Event.ENERGY), Action.ACCEPT, False, base) == 4


def _all_triples(params):
    for e, x, a, h in itertools.product(range(params.battery_capacity + 1), Event, Action, (False, True)):
        yield State(e, x), a, h


@pytest.mark.parametrize("capacity", [1, 3, 10])
def test_transition_invariants_exhaustive(capacity):
    params = ModelParams(battery_capacity=capacity)
    for state, action, harvest in _all_triples(params):
        nxt = apply_transition(state, action, harvest, params)
        assert 0 <= nxt <= capacity
        reward = immediate_reward(state, action, params)
        if reward > 0:
            assert nxt == state.energy - 1
        if action == Action.REJECT or state.event == Event.ENERGY:
            assert reward == 0


def test_validation():
    with pytest.raises(ValueError, match="harvest_success_prob"):
        ModelParams(harvest_success_prob=1.5)
    with pytest.raises(ValueError, match="rate_ground"):
        ModelParams(rate_ground=0)
    with pytest.raises(ValueError, match="battery_capacity"):
        ModelParams(battery_capacity=0)
    with pytest.raises(ValueError):
        ModelParams(energy_per_request=2)
