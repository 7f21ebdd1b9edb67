"""
Absorption probabilities
========================

With zero rows for absorbing nodes, paths stop on arrival and ``Z`` gives
the probability of ending at each absorbing node.
"""

import numpy as np

from bagofpaths import absorption_probability
from bagofpaths.oracle import monte_carlo_absorption, random_killed_chain

W, absorbing = random_killed_chain(5, 2, rng=3)
print(np.round(W.W, 3))

p = absorption_probability(W, absorbing, s=0)
mc, se = monte_carlo_absorption(W, absorbing, 0, walks=100_000, rng=1)
for a, x, y, e in zip(absorbing, p, mc, se):
    print(f"node {a}: exact {x:.4f}  simulated {y:.4f} +- {e:.4f}")
