"""
Learning the thresholds online
==============================

Train the sigmoid policy from theta = (1, 1, 1) with the every-step
eligibility-trace rule, then with the once-per-excursion regenerative rule.
Snapshots carry the exact average reward of the current parameters.
"""

import time

from skyadmit import oracle
from skyadmit.learner import LearnConfig, train
from skyadmit.model import ModelParams
from skyadmit.policy import extract_thresholds, greedy

params = ModelParams()
greedy_psi = oracle.exact_average_reward(greedy(), params)

for algorithm in ("online", "regen"):
    cfg = LearnConfig(algorithm=algorithm, total_steps=1_000_000, snapshot_every=100_000, seed=0)
    start = time.perf_counter()
    res = train(cfg, params)
    print(f"\n{algorithm}: {time.perf_counter() - start:.1f}s")
    for s in res.snapshots:
        print(f"  step {s.step:>8d}  theta {s.theta.round(3)}  psi~ {s.psi_tilde:.4f}  psi {s.psi_exact:.4f}")
    final = res.snapshots[-1].psi_exact
    print(f"  thresholds {extract_thresholds(res.state.theta, 10)}, "
          f"{100 * (final / greedy_psi - 1):.1f}% above greedy")
