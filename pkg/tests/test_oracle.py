import itertools

import numpy as np
import pytest

from skyadmit import oracle
from skyadmit.model import Event, ModelParams, State, event_distribution, state_index
from skyadmit.oracle import Chain, ChainError
from skyadmit.policy import SigmoidPolicy, ThresholdPolicy, greedy, reject_all

REF_THETA = (-1.5577, 4.3448, 1.7029)
# exact greedy value, computed by an independent least-squares solve of the balance equations
GREEDY_PSI = 1.3169804966824201


def _toy(P, R):
    P = np.asarray(P, float)
    return Chain(params=None, states=[State(i, Event.ENERGY) for i in range(len(P))],
                 P=P, R=np.asarray(R, float), accept=None)


def _threshold_table(E, thresholds):
    e = np.arange(E + 1)[:, None]
    return (e >= np.array(thresholds)[None, :]).astype(float)


def test_chain_shape_and_rows(base):
    chain = oracle.build_chain((1, 1, 1), base)
    assert chain.P.shape == (44, 44)
    assert np.abs(chain.P.sum(axis=1) - 1).max() <= 1e-12
    assert (chain.P >= 0).all()


@pytest.mark.parametrize("policy", [greedy(), ThresholdPolicy((1, 6, 3)), SigmoidPolicy((0.3, 7.1, -2)),
                                    SigmoidPolicy(REF_THETA)])
def test_rows_stochastic_for_every_policy(base, policy):
    chain = oracle.build_chain(policy, base)
    assert np.abs(chain.P.sum(axis=1) - 1).max() <= 1e-12


def test_reject_all_moves_energy_only_on_harvest(base):
    chain = oracle.build_chain(reject_all(base.battery_capacity), base)
    E = base.battery_capacity
    P = chain.P.reshape(E + 1, 4, E + 1, 4).sum(axis=3)
    for x in (Event.BALLOON, Event.GROUND, Event.SATELLITE):
        np.testing.assert_allclose(P[:, x, :], np.eye(E + 1), atol=1e-15)


def test_greedy_reward_vector(base):
    chain = oracle.build_chain(greedy(), base)
    for e in range(1, 11):
        assert chain.R[state_index(State(e, Event.BALLOON))] == 5
        assert chain.R[state_index(State(e, Event.GROUND))] == 2
    assert chain.R[state_index(State(0, Event.BALLOON))] == 0


@pytest.mark.parametrize("theta", [(1, 1, 1), REF_THETA, (8, -3, 2)])
def test_stationary_balance_and_event_marginals(base, theta):
    chain = oracle.build_chain(theta, base)
    pi = oracle.stationary_distribution(chain)
    assert np.abs(pi @ chain.P - pi).max() <= 1e-10
    assert abs(pi.sum() - 1) <= 1e-12
    marg = pi.reshape(11, 4).sum(axis=0)
    np.testing.assert_allclose(marg, event_distribution(base), atol=1e-10)


def test_stationary_symmetric_toy():
    pi = oracle.stationary_distribution(_toy([[0.3, 0.7], [0.7, 0.3]], [0, 0]))
    np.testing.assert_allclose(pi, [0.5, 0.5], atol=1e-15)


def test_reject_all_with_sure_harvest_concentrates_at_full():
    params = ModelParams(harvest_success_prob=1.0)
    pi = oracle.evaluate(reject_all(10), params).pi.reshape(11, 4)
    assert pi[10].sum() == pytest.approx(1.0, abs=1e-12)


def test_multiple_closed_classes_raise():
    params = ModelParams(harvest_success_prob=0.0)
    with pytest.raises(ChainError, match="closed classes"):
        oracle.stationary_distribution(oracle.build_chain(reject_all(10), params))


def test_exact_average_reward_values(base):
    assert oracle.exact_average_reward(reject_all(10), base) == 0.0
    assert oracle.exact_average_reward(greedy(), base) == pytest.approx(GREEDY_PSI, abs=1e-12)
    assert abs(oracle.exact_average_reward(REF_THETA, base) - 1.48) <= 0.02


def test_differential_rewards_constant_reward():
    P = [[0.2, 0.5, 0.3], [0.6, 0.1, 0.3], [0.3, 0.3, 0.4]]
    d = oracle.differential_rewards(_toy(P, [2.0, 2.0, 2.0]), 2.0, 0)
    np.testing.assert_allclose(d, 0, atol=1e-14)


def test_psi_centering_identity(base):
    chain = oracle.build_chain(REF_THETA, base)
    pi = oracle.stationary_distribution(chain)
    psi = pi @ chain.R
    assert abs(pi @ (chain.R - psi)) <= 1e-14


def _stopped_sum_mc(P, R, psi, star, n_episodes, seed):
    """Monte Carlo of sum_{k < T} (R(s_k) - psi), T = first k > 0 with s_k = star."""
    rng = np.random.default_rng(seed)
    P = np.asarray(P)
    cdf = np.cumsum(P, axis=1)
    n = len(P)
    means, ses = np.zeros(n), np.zeros(n)
    for s0 in range(n):
        s = np.full(n_episodes, s0)
        total = np.zeros(n_episodes)
        alive = np.ones(n_episodes, bool)
        while alive.any():
            idx = np.flatnonzero(alive)
            total[idx] += R[s[idx]] - psi
            u = rng.random(len(idx))
            s[idx] = (u[:, None] > cdf[s[idx]]).sum(axis=1)
            alive[idx] = s[idx] != star
        means[s0] = total.mean()
        ses[s0] = total.std(ddof=1) / np.sqrt(n_episodes)
    return means, ses


def test_differential_rewards_match_stopped_sum_mc():
    P = np.array([[0.1, 0.6, 0.3], [0.5, 0.2, 0.3], [0.4, 0.4, 0.2]])
    R = np.array([1.0, 3.0, -2.0])
    chain = _toy(P, R)
    psi = oracle.stationary_distribution(chain) @ R
    d = oracle.differential_rewards(chain, psi, 0)
    mc, se = _stopped_sum_mc(P, R, psi, 0, 1_000_000, seed=11)
    # state 0 is the anchor: its stopped sum (a full cycle) has mean zero
    assert np.all(np.abs(d - mc) <= 3 * se)
    assert d[0] == 0.0


def _fd_gradient(theta, params, h=1e-5):
    theta = np.asarray(theta, float)
    return np.array([(oracle.exact_average_reward(theta + h * v, params)
                      - oracle.exact_average_reward(theta - h * v, params)) / (2 * h)
                     for v in np.eye(3)])


def test_exact_gradient_matches_finite_differences(base):
    rng = np.random.default_rng(2024)
    for _ in range(20):
        theta = rng.uniform(-3, 9, 3)
        g = oracle.exact_gradient(theta, base)
        fd = _fd_gradient(theta, base)
        assert np.linalg.norm(g - fd) <= 1e-6 * np.linalg.norm(fd)


def test_gradient_vanishes_in_saturation(base):
    assert np.abs(oracle.exact_gradient((-1e3,) * 3, base)).max() < 1e-12


def test_gradient_insensitive_to_anchor(base):
    ref = oracle.exact_gradient(REF_THETA, base)
    for star in (State(10, Event.ENERGY), State(0, Event.BALLOON), State(5, Event.GROUND)):
        np.testing.assert_allclose(oracle.exact_gradient(REF_THETA, base, recurrent_state=star),
                                   ref, atol=1e-12)


def test_solve_optimal_zero_rewards():
    params = ModelParams(reward_balloon=0, reward_ground=0, reward_satellite=0)
    assert oracle.solve_optimal(params).psi == pytest.approx(0.0, abs=1e-10)


def test_solve_optimal_matches_threshold_enumeration(base):
    sol = oracle.solve_optimal(base)
    E = base.battery_capacity
    best = max(oracle.exact_average_reward(oracle.TablePolicy(_threshold_table(E, t)), base)
               for t in itertools.product(range(1, E + 2), repeat=3))
    assert sol.psi == pytest.approx(best, abs=1e-9)
    assert sol.psi <= 1.55
    # accept decisions are monotone in energy: a per-class threshold policy
    acc = sol.accept[1:]
    assert (np.diff(acc.astype(int), axis=0) >= 0).all()
    assert oracle.exact_average_reward(sol.policy(), base) == pytest.approx(sol.psi, abs=1e-9)


def test_solve_optimal_abundant_energy_is_greedy():
    params = ModelParams(rate_energy=1e5, harvest_success_prob=1.0)
    sol = oracle.solve_optimal(params)
    assert sol.accept[1:].all()
    offered = event_distribution(params)[:3] @ np.array(params.rewards)
    assert sol.psi == pytest.approx(oracle.exact_average_reward(greedy(), params), abs=1e-9)
    assert sol.psi == pytest.approx(offered, rel=1e-6)


def test_value_ordering(base):
    assert oracle.exact_average_reward(greedy(), base) < oracle.exact_average_reward(REF_THETA, base) \
        <= oracle.solve_optimal(base).psi


def test_evaluation_rates(base):
    ev = oracle.evaluate(greedy(), base)
    rates = ev.acceptance_rates()
    assert rates @ np.array(base.rewards) == pytest.approx(ev.psi, abs=1e-12)
    assert 0 <= ev.average_energy() <= 10


def test_policy_table_csv(tmp_path, base):
    path = tmp_path / "p.csv"
    oracle.write_policy_table(greedy(), 2, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "energy,event,accept_prob_or_decision"
    assert lines[1] == "0,BALLOON,0"
    assert len(lines) == 1 + 3 * 3
