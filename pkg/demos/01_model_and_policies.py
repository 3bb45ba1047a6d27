"""
The admission-control model
===========================

One uniformized step draws an event (a request from one of three classes or
an energy arrival), the policy decides, and the battery moves by at most one
unit. This script walks through those pieces and compares the greedy policy
with the sigmoid-threshold policy by simulation.
"""

import numpy as np

from skyadmit.model import Action, Event, ModelParams, State, event_distribution, immediate_reward
from skyadmit.policy import SigmoidPolicy, extract_thresholds, greedy
from skyadmit.simulator import SimConfig, run_trajectory

params = ModelParams()            # E = 10, rates (60, 70, 10, 110), p = 0.9, rewards (5, 2, 3)
print("event probabilities:", dict(zip([e.name for e in Event], event_distribution(params).round(3))))

# an accepted request pays only if the battery can serve it
print(immediate_reward(State(5, Event.BALLOON), Action.ACCEPT, params))   # 5
print(immediate_reward(State(0, Event.BALLOON), Action.ACCEPT, params))   # 0

###############################################################################
# The sigmoid policy accepts a class-x request at battery level e with
# probability 1 / (1 + exp(1.5 (theta_x - e))). Its 0.5 crossings define
# per-class thresholds.

theta = (-1.5577, 4.3448, 1.7029)
pol = SigmoidPolicy(theta)
table = pol.accept_table(params.battery_capacity)
print("P[accept] by energy level (rows) and class (cols):")
print(np.round(table, 3))
print("thresholds:", extract_thresholds(theta, params.battery_capacity))

###############################################################################
# Simulate both policies for a million steps.

for name, policy in [("greedy", greedy()), ("sigmoid", pol)]:
    metrics, _ = run_trajectory(SimConfig(seed=1, horizon=1_000_000), policy, params)
    served = np.array(metrics.accepted) / metrics.steps
    print(f"{name:8s} reward/step {metrics.average_reward:.4f}  served/step {served.round(4)}"
          f"  mean battery {metrics.average_energy:.2f}")
