"""Policy-gradient learners for the sigmoid admission policy.

Two update rules are provided. The regenerative rule updates once per
excursion between visits to a recurrent state. The online rule updates every
step and carries the excursion's running score sum in an eligibility trace.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .model import Event, ModelParams, State, default_recurrent_state, event_distribution
from .oracle import ChainError, exact_average_reward
from .policy import DEFAULT_SLOPE, ParamVector, sigmoid_accept
from .simulator import UniformStream, _draw_event

DIVERGENCE_LIMIT = 1e6


class LearnerDivergence(RuntimeError):
    pass


class Algorithm(str, enum.Enum):
    REGENERATIVE = "regen"
    ONLINE = "online"


@dataclass(frozen=True)
class StepSchedule:
    """``gamma_k = gamma0 * kappa / (kappa + k)`` or a constant ``gamma0``."""

    kind: str = "harmonic"
    gamma0: float = 0.001
    kappa: float = 1e6

    def __post_init__(self):
        if self.kind not in ("harmonic", "constant"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.gamma0 < 0 or not self.kappa > 0:
            raise ValueError("need gamma0 >= 0 and kappa > 0")

    def __call__(self, k: int) -> float:
        if self.kind == "constant":
            return self.gamma0
        return self.gamma0 * self.kappa / (self.kappa + k)

    @property
    def robbins_monro(self) -> bool:
        """Whether sum(gamma) diverges while sum(gamma**2) converges."""
        return self.kind == "harmonic" and self.gamma0 > 0


@dataclass
class LearnerState:
    theta: np.ndarray
    psi: float
    trace: np.ndarray = field(default_factory=lambda: np.zeros(3))
    k: int = 0
    m: int = 0

    def copy(self) -> "LearnerState":
        return replace(self, theta=self.theta.copy(), trace=self.trace.copy())


@dataclass(frozen=True)
class LearnConfig:
    algorithm: Algorithm = Algorithm.ONLINE
    eta: float = 1.0
    schedule: StepSchedule = StepSchedule()
    recurrent_state: State | None = None     # None -> (E // 4, energy arrival)
    total_steps: int = 1_000_000
    initial_theta: tuple[float, float, float] = (1.0, 1.0, 1.0)
    initial_psi: float = 0.7
    seed: int = 0
    slope: float = DEFAULT_SLOPE
    snapshot_every: int = 1000
    initial_energy: int | None = None        # None -> full battery
    update_theta: bool = True                # False: only track the average reward

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.total_steps < 0:
            raise ValueError("total_steps must be >= 0")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")


def regenerative_direction(rewards: Sequence[float], scores: np.ndarray, psi: float) -> np.ndarray:
    """``F_m = sum_n q_n * score_n`` with ``q_n`` the centered reward-to-go of the excursion."""
    scores = np.asarray(scores, dtype=float).reshape(-1, 3)
    centered = np.asarray(rewards, dtype=float) - psi
    if len(centered) == 0:
        return np.zeros(3)
    q = np.cumsum(centered[::-1])[::-1]
    return q @ scores


def trace_direction(rewards: Sequence[float], scores: np.ndarray, psi: float) -> np.ndarray:
    """Same quantity as :func:`regenerative_direction`, via the running score sum."""
    z = np.zeros(3)
    out = np.zeros(3)
    for r, g in zip(rewards, np.asarray(scores, dtype=float).reshape(-1, 3)):
        z = z + g
        out += (r - psi) * z
    return out


def regenerative_update(rewards: Sequence[float], scores: np.ndarray, state: LearnerState,
                        schedule: StepSchedule, eta: float = 1.0) -> LearnerState:
    """Apply one excursion's worth of update at a visit to the recurrent state.

    ``rewards`` and ``scores`` cover the excursion from the previous visit
    (inclusive) to the current one (exclusive).
    """
    gamma = schedule(state.m)
    F = regenerative_direction(rewards, scores, state.psi)
    centered_sum = float(np.sum(np.asarray(rewards, dtype=float) - state.psi))
    return LearnerState(theta=state.theta + gamma * F,
                        psi=state.psi + eta * gamma * centered_sum,
                        trace=np.zeros(3), k=state.k + len(rewards), m=state.m + 1)


def online_step(reward: float, score: np.ndarray, state: LearnerState, schedule: StepSchedule,
                at_recurrent: bool, eta: float = 1.0) -> LearnerState:
    """One every-step update; the trace restarts at the recurrent state."""
    gamma = schedule(state.k)
    z = np.array(score, dtype=float) if at_recurrent else state.trace + score
    innovation = reward - state.psi
    return LearnerState(theta=state.theta + gamma * innovation * z,
                        psi=state.psi + eta * gamma * innovation,
                        trace=z, k=state.k + 1, m=state.m + int(at_recurrent))


@dataclass
class Snapshot:
    step: int
    theta: np.ndarray
    psi_tilde: float
    psi_exact: float | None = None


@dataclass
class TrainResult:
    state: LearnerState
    snapshots: list[Snapshot]
    config: LearnConfig

    @property
    def theta(self) -> ParamVector:
        return ParamVector.from_array(self.state.theta)


def train(config: LearnConfig, params: ModelParams, exact: bool = True,
          on_step: Callable | None = None) -> TrainResult:
    """Simulate the chain while learning theta with the configured algorithm.

    Snapshots are taken at step 0 and every ``config.snapshot_every`` steps
    and at the end. With ``exact=True`` each snapshot also carries the exact
    average reward of the current theta. ``on_step(k, energy, event, action,
    reward)`` is an optional hook, mostly for tests.
    """
    E = params.battery_capacity
    star = config.recurrent_state or default_recurrent_state(params)
    star_e, star_x = star.energy, int(star.event)
    slope = config.slope
    rewards = params.rewards
    harvest = params.harvest_success_prob
    cdf = np.cumsum(event_distribution(params)).tolist()
    u = UniformStream(config.seed)
    sched = config.schedule
    harmonic = sched.kind == "harmonic"
    g0, kappa = sched.gamma0, sched.kappa
    eta = config.eta
    regen = config.algorithm is Algorithm.REGENERATIVE
    learn = 1.0 if config.update_theta else 0.0

    theta = [float(t) for t in config.initial_theta]
    psi = float(config.initial_psi)
    z = [0.0, 0.0, 0.0]
    m = 0
    energy = E if config.initial_energy is None else int(config.initial_energy)
    # regenerative bookkeeping: rewards and (class, score) of the open excursion
    ex_rewards: list[float] = []
    ex_scores: list[tuple[int, float]] = []
    seen_star = False

    snapshots: list[Snapshot] = []

    def snap(k):
        th = np.array(theta)
        psi_exact = None
        if exact:
            try:
                psi_exact = exact_average_reward(ParamVector.from_array(th), params, slope)
            except ChainError:
                psi_exact = float("nan")
        snapshots.append(Snapshot(k, th, psi, psi_exact))

    snap(0)
    for k in range(config.total_steps):
        x = _draw_event(cdf, u())
        at_star = energy == star_e and x == star_x
        if x == 3:
            r = 0.0
            cls = -1
            g = 0.0
            action = 1
            if u() < harvest and energy < E:
                energy_next = energy + 1
            else:
                energy_next = energy
        else:
            cls = x
            p = sigmoid_accept(theta[x], energy, slope)
            if u() < p:
                action = 1
                g = -slope * (1.0 - p)
                if energy >= 1:
                    r = rewards[x]
                    energy_next = energy - 1
                else:
                    r = 0.0
                    energy_next = energy
            else:
                action = 0
                g = slope * p
                r = 0.0
                energy_next = energy
        if on_step is not None:
            on_step(k, energy, x, action, r)

        if regen:
            if at_star:
                if seen_star:
                    gamma = g0 * kappa / (kappa + m) if harmonic else g0
                    n = len(ex_rewards)
                    togo = 0.0
                    F = [0.0, 0.0, 0.0]
                    for i in range(n - 1, -1, -1):
                        togo += ex_rewards[i] - psi
                        c, gi = ex_scores[i]
                        if c >= 0:
                            F[c] += togo * gi
                    for j in range(3):
                        theta[j] += learn * gamma * F[j]
                    psi += eta * gamma * togo
                    m += 1
                    if max(abs(t) for t in theta) > DIVERGENCE_LIMIT:
                        raise LearnerDivergence(f"|theta| exceeded {DIVERGENCE_LIMIT:g} at step {k}: {theta}")
                seen_star = True
                ex_rewards = []
                ex_scores = []
            if seen_star:
                ex_rewards.append(r)
                ex_scores.append((cls, g))
        else:
            gamma = g0 * kappa / (kappa + k) if harmonic else g0
            if at_star:
                z[0] = z[1] = z[2] = 0.0
                m += 1
            if cls >= 0:
                z[cls] += g
            innov = r - psi
            step = gamma * innov
            psi += eta * step
            step *= learn
            theta[0] += step * z[0]
            theta[1] += step * z[1]
            theta[2] += step * z[2]
            if abs(theta[0]) > DIVERGENCE_LIMIT or abs(theta[1]) > DIVERGENCE_LIMIT \
                    or abs(theta[2]) > DIVERGENCE_LIMIT:
                raise LearnerDivergence(f"|theta| exceeded {DIVERGENCE_LIMIT:g} at step {k}: {theta}")
        energy = energy_next
        if (k + 1) % config.snapshot_every == 0 and k + 1 < config.total_steps:
            snap(k + 1)
    if config.total_steps > 0:
        snap(config.total_steps)
    final = LearnerState(np.array(theta), psi, np.array(z), config.total_steps, m)
    return TrainResult(final, snapshots, config)


@dataclass(frozen=True)
class GradientEstimate:
    gradient: np.ndarray
    stderr: np.ndarray
    n_cycles: int
    mean_cycle_length: float


def estimate_gradient(theta, params: ModelParams, psi: float, n_cycles: int, seed: int = 0,
                      recurrent_state: State | None = None,
                      slope: float = DEFAULT_SLOPE) -> GradientEstimate:
    """Regenerative gradient estimate with theta held fixed.

    Each cycle between visits to the recurrent state contributes one ``F_m``
    (computed with the given ``psi``) and its length ``T_m``. The gradient is
    the ratio ``mean(F) / mean(T)``; its standard error uses the delta method.
    """
    E = params.battery_capacity
    star = recurrent_state or default_recurrent_state(params)
    star_e, star_x = star.energy, int(star.event)
    th = [float(t) for t in theta]
    rewards = params.rewards
    harvest = params.harvest_success_prob
    cdf = np.cumsum(event_distribution(params)).tolist()
    u = UniformStream(seed)
    accept = [[sigmoid_accept(th[x], e, slope) for x in range(3)] for e in range(E + 1)]

    F = np.zeros((n_cycles, 3))
    T = np.zeros(n_cycles)
    energy = star_e
    # start exactly at the recurrent state
    x = star_x
    cycle = -1
    z = [0.0, 0.0, 0.0]
    f = [0.0, 0.0, 0.0]
    length = 0
    while True:
        if energy == star_e and x == star_x:
            if cycle >= 0:
                F[cycle] = f
                T[cycle] = length
            cycle += 1
            if cycle == n_cycles:
                break
            z = [0.0, 0.0, 0.0]
            f = [0.0, 0.0, 0.0]
            length = 0
        if x == 3:
            r = 0.0
            if u() < harvest and energy < E:
                energy += 1
        else:
            p = accept[energy][x]
            if u() < p:
                z[x] -= slope * (1.0 - p)
                if energy >= 1:
                    r = rewards[x]
                    energy -= 1
                else:
                    r = 0.0
            else:
                z[x] += slope * p
                r = 0.0
        c = r - psi
        f[0] += c * z[0]
        f[1] += c * z[1]
        f[2] += c * z[2]
        length += 1
        x = _draw_event(cdf, u())

    mean_T = T.mean()
    grad = F.mean(axis=0) / mean_T
    resid = F - grad[None, :] * T[:, None]
    stderr = resid.std(axis=0, ddof=1) / (mean_T * np.sqrt(n_cycles))
    return GradientEstimate(grad, stderr, n_cycles, float(mean_T))


def write_trace(result: TrainResult, path) -> None:
    """Snapshot CSV: ``step,theta_b,theta_c,theta_s,psi_tilde,psi_exact``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "theta_b", "theta_c", "theta_s", "psi_tilde", "psi_exact"])
        for s in result.snapshots:
            exact = "" if s.psi_exact is None else format(s.psi_exact, ".10g")
            writer.writerow([s.step, *(format(t, ".10g") for t in s.theta),
                             format(s.psi_tilde, ".10g"), exact])
