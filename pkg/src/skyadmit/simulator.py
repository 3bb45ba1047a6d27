"""Seeded Monte Carlo simulation of the uniformized admission chain.

Every step consumes uniforms from one stream in a fixed order: the event
draw, then the action draw (request events only), then the harvest draw
(energy events only).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .model import (Action, Event, ModelParams, State, apply_transition,
                    event_distribution, immediate_reward)
from .policy import Policy

#: Bit generator used by every run; written into experiment outputs.
RNG_ID = "numpy.random.PCG64"


class UniformStream:
    """Sequential uniforms on [0, 1) from a seeded PCG64 generator, drawn in blocks."""

    def __init__(self, seed: int, block: int = 65536):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))
        self._block = block
        self._buf: list[float] = []
        self._pos = 0

    def __call__(self) -> float:
        if self._pos == len(self._buf):
            self._buf = self._gen.random(self._block).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


_EVENTS = tuple(Event)


def _draw_event(cdf: Sequence[float], u: float) -> Event:
    for i in range(3):
        if u < cdf[i]:
            return _EVENTS[i]
    return Event.ENERGY


class TrajectoryStep(NamedTuple):
    step: int
    energy: int
    event: Event
    action: Action
    reward: float
    next_energy: int

    @property
    def state(self) -> State:
        return State(self.energy, self.event)


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    horizon: int = 1_000_000
    initial_energy: int | None = None  # None -> full battery
    burn_in: int = 10_000

    def __post_init__(self):
        if not self.horizon > self.burn_in >= 0:
            raise ValueError(f"need horizon > burn_in >= 0, got {self.horizon}, {self.burn_in}")


@dataclass
class Metrics:
    steps: int = 0
    total_reward: float = 0.0
    accepted: list[int] = field(default_factory=lambda: [0, 0, 0])
    offered: list[int] = field(default_factory=lambda: [0, 0, 0])
    energy_sum: int = 0
    harvested: int = 0

    @property
    def average_reward(self) -> float:
        return self.total_reward / self.steps if self.steps else 0.0

    @property
    def average_energy(self) -> float:
        return self.energy_sum / self.steps if self.steps else 0.0

    def record(self, rec: TrajectoryStep) -> None:
        self.steps += 1
        self.total_reward += rec.reward
        self.energy_sum += rec.energy
        if rec.event == Event.ENERGY:
            self.harvested += rec.next_energy - rec.energy
        else:
            self.offered[rec.event] += 1
            if rec.next_energy < rec.energy:
                self.accepted[rec.event] += 1


class _Sampler:
    """Per-run cache of the event CDF and acceptance probabilities."""

    def __init__(self, params: ModelParams, stream: UniformStream, policy: Policy):
        self.params = params
        self.stream = stream
        self.policy = policy
        self.cdf = np.cumsum(event_distribution(params)).tolist()
        self._accept: dict[tuple[int, int], float] = {}

    def accept_probability(self, energy: int, event: Event) -> float:
        key = (energy, event)
        p = self._accept.get(key)
        if p is None:
            p = self._accept[key] = self.policy.accept_probability(energy, event)
        return p

    def step(self, index: int, energy: int) -> TrajectoryStep:
        params, u = self.params, self.stream
        event = _draw_event(self.cdf, u())
        state = State(energy, event)
        if event == Event.ENERGY:
            action = Action.ACCEPT
            success = u() < params.harvest_success_prob
        else:
            # inverse-CDF draw, same rule as policy.sample_action
            action = Action.ACCEPT if u() < self.accept_probability(energy, event) else Action.REJECT
            success = False
        return TrajectoryStep(index, energy, event, action,
                              immediate_reward(state, action, params),
                              apply_transition(state, action, success, params))


def step(energy: int, policy: Policy, params: ModelParams, rng: UniformStream,
         index: int = 0) -> TrajectoryStep:
    """Simulate one uniformized step from battery level ``energy``."""
    if not 0 <= energy <= params.battery_capacity:
        raise ValueError(f"energy {energy} outside [0, {params.battery_capacity}]")
    return _Sampler(params, rng, policy).step(index, energy)


def run_trajectory(config: SimConfig, policy: Policy, params: ModelParams,
                   record: bool = False) -> tuple[Metrics, list[TrajectoryStep] | None]:
    """Run ``config.horizon`` steps; metrics cover steps after ``burn_in``.

    With ``record=True`` the full step log (including burn-in) is returned.
    """
    energy = params.battery_capacity if config.initial_energy is None else config.initial_energy
    if not 0 <= energy <= params.battery_capacity:
        raise ValueError(f"initial_energy {energy} outside [0, {params.battery_capacity}]")
    sampler = _Sampler(params, UniformStream(config.seed), policy)
    metrics = Metrics()
    log = [] if record else None
    for k in range(config.horizon):
        rec = sampler.step(k, energy)
        if k >= config.burn_in:
            metrics.record(rec)
        if log is not None:
            log.append(rec)
        energy = rec.next_energy
    return metrics, log


def estimate_average_reward(policy: Policy, params: ModelParams, n_seeds: int = 10,
                            horizon: int = 100_000, burn_in: int = 10_000,
                            seed: int = 0) -> tuple[float, float]:
    """Mean and standard error of the average reward over independent runs."""
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    seeds = run_seeds(seed, n_seeds)
    values = np.array([
        run_trajectory(SimConfig(s, horizon, None, burn_in), policy, params)[0].average_reward
        for s in seeds])
    se = values.std(ddof=1) / math.sqrt(n_seeds) if n_seeds > 1 else float("nan")
    return float(values.mean()), float(se)


def run_seeds(seed: int, n: int) -> list[int]:
    """``n`` independent 63-bit seeds derived from ``seed``."""
    ss = np.random.SeedSequence(seed)
    return [int(c.generate_state(2, np.uint64)[0] >> np.uint64(1)) for c in ss.spawn(n)]


def write_step_log(steps: Sequence[TrajectoryStep], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "energy", "event", "action", "reward", "next_energy"])
        for s in steps:
            writer.writerow([s.step, s.energy, s.event.name, int(s.action),
                             format(s.reward, ".10g"), s.next_energy])
