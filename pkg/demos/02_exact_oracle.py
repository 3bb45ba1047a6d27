"""
Exact answers on the 44-state chain
===================================

The induced Markov chain is small, so the stationary distribution, the
average reward, its gradient and the optimal policy can all be computed
exactly. These are the references every stochastic component is checked
against.
"""

import numpy as np

from skyadmit import oracle
from skyadmit.model import ModelParams
from skyadmit.policy import greedy

params = ModelParams()
theta = np.array([1.0, 1.0, 1.0])

chain = oracle.build_chain(theta, params)
pi = oracle.stationary_distribution(chain)
print("states:", chain.n, " max |pi P - pi|:", np.abs(pi @ chain.P - pi).max())
print("battery distribution:", pi.reshape(11, 4).sum(axis=1).round(3))

###############################################################################
# Gradient of the average reward, against central differences.

g = oracle.exact_gradient(theta, params)
h = 1e-5
fd = [(oracle.exact_average_reward(theta + h * v, params)
       - oracle.exact_average_reward(theta - h * v, params)) / (2 * h) for v in np.eye(3)]
print("exact gradient:", g)
print("finite diff.  :", np.array(fd))

###############################################################################
# Relative value iteration gives the best deterministic policy.

best = oracle.solve_optimal(params)
print(f"greedy psi  = {oracle.exact_average_reward(greedy(), params):.4f}")
print(f"optimal psi = {best.psi:.4f} after {best.sweeps} sweeps")
print("optimal accept table (rows: energy 0..10, cols: classes):")
print(best.accept.astype(int))
