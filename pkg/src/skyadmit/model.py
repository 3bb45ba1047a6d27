"""Environment model for an energy-harvesting access point.

Requests from three classes and energy arrivals are merged into a single
uniformized event stream. Each step draws one event; a request event is
accepted or rejected, an energy arrival is harvested with some probability.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

#: Energy units consumed by serving one request.
ENERGY_PER_REQUEST = 1


class Event(enum.IntEnum):
    BALLOON = 0
    GROUND = 1
    SATELLITE = 2
    ENERGY = 3

    @property
    def is_request(self) -> bool:
        return self is not Event.ENERGY


REQUEST_EVENTS = (Event.BALLOON, Event.GROUND, Event.SATELLITE)


class Action(enum.IntEnum):
    REJECT = 0
    ACCEPT = 1


class State(NamedTuple):
    energy: int
    event: Event


@dataclass(frozen=True)
class ModelParams:
    """Constants of the admission-control MDP.

    Defaults are the reference setup: battery of 10 units, request rates
    (60, 70, 10)/hour, energy rate 110/hour harvested with probability 0.9,
    and per-request rewards (5, 2, 3).
    """

    battery_capacity: int = 10
    rate_balloon: float = 60.0
    rate_ground: float = 70.0
    rate_satellite: float = 10.0
    rate_energy: float = 110.0
    harvest_success_prob: float = 0.9
    reward_balloon: float = 5.0
    reward_ground: float = 2.0
    reward_satellite: float = 3.0
    energy_per_request: int = ENERGY_PER_REQUEST

    def __post_init__(self):
        if int(self.battery_capacity) != self.battery_capacity or self.battery_capacity < 1:
            raise ValueError(f"battery_capacity must be an integer >= 1, got {self.battery_capacity!r}")
        for name in ("rate_balloon", "rate_ground", "rate_satellite", "rate_energy"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a finite positive rate, got {value!r}")
        if not 0.0 <= self.harvest_success_prob <= 1.0:
            raise ValueError(
                f"harvest_success_prob must lie in [0, 1], got {self.harvest_success_prob!r}")
        for name in ("reward_balloon", "reward_ground", "reward_satellite"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.energy_per_request != ENERGY_PER_REQUEST:
            raise ValueError("energy_per_request is fixed at 1")

    @property
    def rates(self) -> tuple[float, float, float, float]:
        return (self.rate_balloon, self.rate_ground, self.rate_satellite, self.rate_energy)

    @property
    def rewards(self) -> tuple[float, float, float]:
        return (self.reward_balloon, self.reward_ground, self.reward_satellite)

    @property
    def n_states(self) -> int:
        return (self.battery_capacity + 1) * len(Event)

    def reward_for(self, event: Event) -> float:
        return self.rewards[event] if event.is_request else 0.0


def uniformization_constant(params: ModelParams) -> float:
    """Total event rate ``u``: the sum of the four arrival rates."""
    return float(sum(params.rates))


def event_distribution(params: ModelParams) -> np.ndarray:
    """Per-step event probabilities ``rate / u`` ordered as :class:`Event`.

    The energy component is computed as one minus the others so the vector
    sums to exactly one.
    """
    u = uniformization_constant(params)
    probs = np.array(params.rates, dtype=float) / u
    probs[Event.ENERGY] = 1.0 - probs[:Event.ENERGY].sum()
    return probs


def is_feasible(energy: int, params: ModelParams) -> bool:
    return energy >= params.energy_per_request


def immediate_reward(state: State, action: Action, params: ModelParams) -> float:
    """Revenue collected at ``state`` under ``action``.

    Only an accepted request that the battery can actually serve pays.
    """
    energy, event = state
    if event == Event.ENERGY or action != Action.ACCEPT:
        return 0.0
    if not is_feasible(energy, params):
        return 0.0
    return params.rewards[event]


def apply_transition(state: State, action: Action, harvest_success: bool,
                     params: ModelParams) -> int:
    """Battery level after handling one event.

    An accept at an empty battery is a no-op. A successful harvest saturates
    at capacity.
    """
    energy, event = state
    if event == Event.ENERGY:
        if harvest_success and energy < params.battery_capacity:
            return energy + 1
        return energy
    if action == Action.ACCEPT and is_feasible(energy, params):
        return energy - params.energy_per_request
    return energy


def all_states(params: ModelParams) -> list[State]:
    """Every (energy, event) pair, ordered energy-major.

    ``state_index`` gives the position of a state in this list.
    """
    return [State(e, x) for e in range(params.battery_capacity + 1) for x in Event]


def state_index(state: State) -> int:
    return state.energy * len(Event) + int(state.event)


def default_recurrent_state(params: ModelParams) -> State:
    """Regeneration state ``(E // 4, energy arrival)``.

    A low-to-middle battery level is visited often both near the greedy
    policy and near the tuned one, which keeps excursions short.
    """
    return State(params.battery_capacity // 4, Event.ENERGY)
