"""Admission policies: the sigmoid-threshold randomized policy and baselines."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import Action, Event, REQUEST_EVENTS, State

#: Steepness of the logistic acceptance curve.
DEFAULT_SLOPE = 1.5


@dataclass(frozen=True)
class ParamVector:
    """Soft acceptance thresholds, in energy units, one per request class."""

    theta_balloon: float = 1.0
    theta_ground: float = 1.0
    theta_satellite: float = 1.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self):
            raise ValueError(f"theta components must be finite, got {tuple(self)}")

    def __iter__(self):
        return iter((self.theta_balloon, self.theta_ground, self.theta_satellite))

    def __getitem__(self, event: int) -> float:
        return (self.theta_balloon, self.theta_ground, self.theta_satellite)[event]

    def as_array(self) -> np.ndarray:
        return np.array(tuple(self), dtype=float)

    @classmethod
    def from_array(cls, values: Iterable[float]) -> "ParamVector":
        b, c, s = (float(v) for v in values)
        return cls(b, c, s)


def sigmoid_accept(theta_x: float, energy: float, slope: float = DEFAULT_SLOPE) -> float:
    """``1 / (1 + exp(slope * (theta_x - energy)))`` without overflow."""
    z = slope * (theta_x - energy)
    if z >= 0:
        ez = math.exp(-z)
        return ez / (1.0 + ez)
    return 1.0 / (1.0 + math.exp(z))


class Policy:
    """Base class. Subclasses supply ``accept_probability``."""

    def accept_probability(self, energy: int, event: Event) -> float:
        raise NotImplementedError

    def action_distribution(self, state: State) -> tuple[float, float]:
        """``(P[accept], P[reject])``.

        Energy arrivals have a single forced action, reported as accept with
        probability one.
        """
        energy, event = state
        if event == Event.ENERGY:
            return (1.0, 0.0)
        p = self.accept_probability(energy, event)
        return (p, 1.0 - p)

    def accept_table(self, capacity: int) -> np.ndarray:
        """Acceptance probabilities as an array of shape ``(capacity + 1, 3)``."""
        return np.array([[self.accept_probability(e, x) for x in REQUEST_EVENTS]
                         for e in range(capacity + 1)])


class SigmoidPolicy(Policy):
    def __init__(self, theta: ParamVector | Sequence[float], slope: float = DEFAULT_SLOPE):
        if not isinstance(theta, ParamVector):
            theta = ParamVector.from_array(theta)
        if not slope > 0:
            raise ValueError(f"slope must be positive, got {slope}")
        self.theta = theta
        self.slope = float(slope)

    def __repr__(self):
        return f"SigmoidPolicy({tuple(self.theta)}, slope={self.slope})"

    def accept_probability(self, energy: int, event: Event) -> float:
        if not Event(event).is_request:
            raise ValueError("energy arrivals carry no accept decision")
        return sigmoid_accept(self.theta[event], energy, self.slope)

    def score(self, state: State, action: Action) -> np.ndarray:
        """Gradient of ``log mu(state, action)`` with respect to theta."""
        return score(self, state, action)


class ThresholdPolicy(Policy):
    """Deterministic: accept a class-``x`` request iff energy >= threshold[x]."""

    def __init__(self, thresholds: Sequence[int]):
        self.thresholds = tuple(int(t) for t in thresholds)
        if len(self.thresholds) != 3:
            raise ValueError("need one threshold per request class")

    def __repr__(self):
        return f"ThresholdPolicy({self.thresholds})"

    def accept_probability(self, energy: int, event: Event) -> float:
        if not Event(event).is_request:
            raise ValueError("energy arrivals carry no accept decision")
        return 1.0 if energy >= self.thresholds[event] else 0.0


class TablePolicy(Policy):
    """Accept probabilities looked up from a ``(E + 1, 3)`` table."""

    def __init__(self, table):
        self.table = np.asarray(table, dtype=float)
        if self.table.ndim != 2 or self.table.shape[1] != 3:
            raise ValueError("table must have shape (E + 1, 3)")

    def accept_probability(self, energy: int, event: Event) -> float:
        if not Event(event).is_request:
            raise ValueError("energy arrivals carry no accept decision")
        return float(self.table[energy, event])


def greedy() -> ThresholdPolicy:
    """Accept every request the battery can serve."""
    return ThresholdPolicy((1, 1, 1))


def reject_all(capacity: int) -> ThresholdPolicy:
    return ThresholdPolicy((capacity + 1,) * 3)


def accept_probability(policy: SigmoidPolicy, energy: int, event: Event) -> float:
    return policy.accept_probability(energy, event)


def action_distribution(policy: Policy, state: State) -> tuple[float, float]:
    return policy.action_distribution(state)


def sample_action(policy: Policy, state: State, draw: float) -> Action:
    """Inverse-CDF sample over (accept, reject); ``draw`` is uniform on [0, 1)."""
    p_accept, _ = policy.action_distribution(state)
    return Action.ACCEPT if draw < p_accept else Action.REJECT


def score(policy: SigmoidPolicy, state: State, action: Action) -> np.ndarray:
    out = np.zeros(3)
    energy, event = state
    if event == Event.ENERGY:
        return out
    p = policy.accept_probability(energy, event)
    if action == Action.ACCEPT:
        out[event] = -policy.slope * (1.0 - p)
    else:
        out[event] = policy.slope * p
    return out


def extract_thresholds(theta: ParamVector | Sequence[float], capacity: int) -> tuple[int, int, int]:
    """Smallest energy level in ``1..capacity`` where acceptance is at least 1/2.

    That is ``ceil(theta_x)`` clamped to ``[1, capacity + 1]``; ``capacity + 1``
    means the class is never accepted.
    """
    out = []
    for t in theta:
        out.append(int(min(max(math.ceil(t), 1), capacity + 1)))
    return tuple(out)
