"""Exact computations on the embedded chain.

The chain has ``(E + 1) * 4`` states, so everything here is a dense linear
solve. These results are the ground truth for the simulator and learner.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .model import (Event, ModelParams, REQUEST_EVENTS, State, all_states,
                    default_recurrent_state, event_distribution, state_index)
from .policy import (DEFAULT_SLOPE, ParamVector, Policy, SigmoidPolicy,
                     TablePolicy)


class ChainError(RuntimeError):
    """Raised when the induced chain has no unique stationary distribution."""


@dataclass(frozen=True)
class Chain:
    params: ModelParams
    states: list[State]
    P: np.ndarray               # (n, n) transition matrix under the policy
    R: np.ndarray               # (n,) expected one-step reward under the policy
    accept: np.ndarray          # (E + 1, 3) acceptance probabilities

    @property
    def n(self) -> int:
        return len(self.states)


def _as_policy(policy, slope: float = DEFAULT_SLOPE) -> Policy:
    if isinstance(policy, Policy):
        return policy
    return SigmoidPolicy(policy, slope)


def energy_kernel(params: ModelParams, accept: np.ndarray) -> np.ndarray:
    """``K[e, x, e']``: probability the battery moves ``e -> e'`` on event ``x``."""
    E = params.battery_capacity
    K = np.zeros((E + 1, 4, E + 1))
    for e in range(E + 1):
        for x in REQUEST_EVENTS:
            if e >= params.energy_per_request:
                K[e, x, e - 1] += accept[e, x]
                K[e, x, e] += 1.0 - accept[e, x]
            else:
                K[e, x, e] = 1.0
        up = min(e + 1, E)
        K[e, Event.ENERGY, up] += params.harvest_success_prob
        K[e, Event.ENERGY, e] += 1.0 - params.harvest_success_prob
    return K


def build_chain(policy, params: ModelParams, slope: float = DEFAULT_SLOPE) -> Chain:
    """Transition matrix and reward vector induced by ``policy``.

    ``policy`` is a :class:`Policy` or a theta vector for the sigmoid policy.
    """
    policy = _as_policy(policy, slope)
    E = params.battery_capacity
    accept = policy.accept_table(E)
    probs = event_distribution(params)
    K = energy_kernel(params, accept)
    # next event is independent of everything: P[(e,x), (e',x')] = K[e,x,e'] * p(x')
    P = (K[:, :, :, None] * probs[None, None, None, :]).reshape(params.n_states, params.n_states)
    R = np.zeros((E + 1, 4))
    served = np.arange(E + 1) >= params.energy_per_request
    R[:, :3] = accept * np.array(params.rewards)[None, :] * served[:, None]
    return Chain(params, all_states(params), P, R.reshape(-1), accept)


def _closed_classes(P: np.ndarray) -> list[np.ndarray]:
    n_comp, labels = connected_components(P > 0, directed=True, connection="strong")
    closed = []
    for c in range(n_comp):
        members = np.flatnonzero(labels == c)
        outside = np.ones(len(P), bool)
        outside[members] = False
        if not (P[np.ix_(members, outside)] > 0).any():
            closed.append(members)
    return closed


def stationary_distribution(chain: Chain, tol: float = 1e-10) -> np.ndarray:
    """Solve ``pi P = pi, sum(pi) = 1`` by a direct linear solve."""
    n = chain.n
    closed = _closed_classes(chain.P)
    if len(closed) != 1:
        descr = "; ".join("{" + ", ".join(str(tuple(chain.states[i])) for i in c) + "}"
                          for c in closed)
        raise ChainError(f"chain has {len(closed)} closed classes, no unique stationary "
                         f"distribution; classes unreachable from each other: {descr}")
    A = chain.P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    resid = np.abs(pi @ chain.P - pi).max()
    if resid > tol:
        raise ChainError(f"balance residual {resid:.3e} exceeds {tol:.1e}")
    return pi


def average_reward(chain: Chain) -> float:
    return float(stationary_distribution(chain) @ chain.R)


def exact_average_reward(policy, params: ModelParams, slope: float = DEFAULT_SLOPE) -> float:
    """Long-run reward per step, ``pi . R``."""
    return average_reward(build_chain(policy, params, slope))


def differential_rewards(chain: Chain, psi: float, recurrent_state: State | int | None = None) -> np.ndarray:
    """Expected centered reward accumulated until the first return to ``recurrent_state``.

    Solves ``d = R - psi + P d`` with ``d[recurrent_state] = 0``. The state may
    also be given as a row index of ``chain.P``.
    """
    if recurrent_state is None:
        recurrent_state = default_recurrent_state(chain.params)
    star = state_index(recurrent_state) if isinstance(recurrent_state, State) else int(recurrent_state)
    keep = np.arange(chain.n) != star
    A = np.eye(chain.n - 1) - chain.P[np.ix_(keep, keep)]
    try:
        sub = np.linalg.solve(A, (chain.R - psi)[keep])
    except np.linalg.LinAlgError as exc:
        raise ChainError(f"{recurrent_state} is not reachable from every state") from exc
    d = np.zeros(chain.n)
    d[keep] = sub
    return d


@dataclass(frozen=True)
class Evaluation:
    psi: float
    pi: np.ndarray
    chain: Chain

    def acceptance_rates(self) -> np.ndarray:
        """Expected served requests per step for each class."""
        E = self.chain.params.battery_capacity
        pi = self.pi.reshape(E + 1, 4)[:, :3]
        served = (np.arange(E + 1) >= self.chain.params.energy_per_request)[:, None]
        return (pi * self.chain.accept * served).sum(axis=0)

    def average_energy(self) -> float:
        E = self.chain.params.battery_capacity
        return float(self.pi.reshape(E + 1, 4).sum(axis=1) @ np.arange(E + 1))


def evaluate(policy, params: ModelParams, slope: float = DEFAULT_SLOPE) -> Evaluation:
    chain = build_chain(policy, params, slope)
    pi = stationary_distribution(chain)
    return Evaluation(float(pi @ chain.R), pi, chain)


def exact_gradient(theta, params: ModelParams, slope: float = DEFAULT_SLOPE,
                   recurrent_state: State | None = None) -> np.ndarray:
    """Gradient of the average reward with respect to the sigmoid thresholds.

    Uses ``sum_s pi(s) sum_a grad mu(s, a) q(s, a)`` with ``q`` built from the
    differential rewards; only request states carry a nonzero ``grad mu``.
    """
    if isinstance(theta, SigmoidPolicy):
        slope, theta = theta.slope, theta.theta
    chain = build_chain(ParamVector.from_array(theta), params, slope)
    pi = stationary_distribution(chain)
    psi = float(pi @ chain.R)
    d = differential_rewards(chain, psi, recurrent_state)
    E = params.battery_capacity
    # expected d over the next event, as a function of next energy level
    d_next = d.reshape(E + 1, 4) @ event_distribution(params)
    p = chain.accept
    dp = -slope * p * (1.0 - p)                       # d accept_prob / d theta_x
    q_gap = np.zeros((E + 1, 3))                      # q(accept) - q(reject)
    e = np.arange(1, E + 1)
    q_gap[1:] = np.array(params.rewards)[None, :] + (d_next[e - 1] - d_next[e])[:, None]
    weights = pi.reshape(E + 1, 4)[:, :3]
    return (weights * dp * q_gap).sum(axis=0)


@dataclass(frozen=True)
class OptimalSolution:
    psi: float
    accept: np.ndarray          # (E + 1, 3) boolean decisions
    bias: np.ndarray            # relative values over the (E + 1) * 4 states
    sweeps: int

    def policy(self) -> TablePolicy:
        return TablePolicy(self.accept.astype(float))


def solve_optimal(params: ModelParams, tol: float = 1e-10, max_sweeps: int = 1_000_000) -> OptimalSolution:
    """Average-reward optimal deterministic policy by relative value iteration.

    Stops when the span of successive value differences drops below ``tol``.
    Ties are broken toward accepting.
    """
    E = params.battery_capacity
    probs = event_distribution(params)
    rewards = np.array(params.rewards)
    h = np.zeros((E + 1, 4))
    ref = (E, Event.ENERGY)
    e = np.arange(E + 1)
    down = np.maximum(e - 1, 0)
    up = np.minimum(e + 1, E)
    ps = params.harvest_success_prob
    feasible = e >= params.energy_per_request
    for sweep in range(1, max_sweeps + 1):
        w = h @ probs                                # value of landing at each energy level
        accept_val = np.where(feasible[:, None], rewards[None, :] + w[down][:, None], w[:, None])
        reject_val = np.broadcast_to(w[:, None], (E + 1, 3))
        new = np.empty_like(h)
        new[:, :3] = np.maximum(accept_val, reject_val)
        new[:, 3] = ps * w[up] + (1 - ps) * w
        diff = new - h
        span = diff.max() - diff.min()
        h = new - new[ref]
        if span < tol:
            psi = 0.5 * (diff.max() + diff.min())
            decision = (accept_val >= reject_val - 1e-12) & feasible[:, None]
            return OptimalSolution(float(psi), decision, h.reshape(-1), sweep)
    raise ChainError(f"relative value iteration did not converge in {max_sweeps} sweeps")


def write_policy_table(policy: Policy, capacity: int, path) -> None:
    """CSV with columns ``energy,event,accept_prob_or_decision``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["energy", "event", "accept_prob_or_decision"])
        for e in range(capacity + 1):
            for x in REQUEST_EVENTS:
                writer.writerow([e, x.name, format(policy.accept_probability(e, x), ".10g")])
