"""
Path weights with node constraints
==================================

Total weights of sets of paths, read off the fundamental matrix.
"""

import numpy as np

from bagofpaths import fundamental_matrix, validate_weight_matrix
from bagofpaths import paths as P
from bagofpaths.oracle import QuantitySpec, enumerate_quantity

# Two nodes, edge 1->2 with weight 0.5 and 2->1 with weight 0.4.
W = validate_weight_matrix([[0.0, 0.5], [0.4, 0.0]])
T = fundamental_matrix(W)

# Z[s, t] sums the weights of every path from s to t, including the
# zero-length path when s == t: 1 + 0.2 + 0.2**2 + ... = 1.25.
print("Z =\n", T.Z)

# Hitting paths stop at their first arrival at t.
print("Zh =\n", T.Zh)

# Paths 1 -> 1 through node 2: (1,2,1), (1,2,1,2,1), ... = 0.2 / 0.8.
print("visiting node 2:", P.z_plus_node(T, 1)[0, 0])
# The rest is only the zero-length path.
print("avoiding node 2:", P.z_minus_node(T, 1).M[0, 0])

# %%
# The same numbers by brute force: sum over every path up to length 60.
res = enumerate_quantity(W, QuantitySpec("via-node", (1,), endpoints=(0, 0)), 60)
print(f"enumerated: {res.value:.15f}  (omitted tail <= {res.remainder_bound:.1e})")

# %%
# Larger constraint sets: avoid a set by eliminating nodes one at a time,
# require a set by inclusion-exclusion.
rng = np.random.default_rng(0)
A = rng.uniform(0.5, 2, (6, 6)) * (rng.random((6, 6)) < 0.6)
np.fill_diagonal(A, 0)
W6 = validate_weight_matrix(A / (1.5 * A.sum(axis=1, keepdims=True)))
T6 = fundamental_matrix(W6)
avoid = P.z_minus_set(T6, [1, 3, 4])
visit = P.z_plus_set(T6, [1, 3])
print("paths 0 -> 2 avoiding {1,3,4}:", avoid[0, 2])
print("paths 0 -> 2 visiting 1 and 3:", visit[0, 2], "=", P.z_plus_pair(T6, 1, 3)[0, 2])

# Occurrence sums count repeated visits.
print("sum of visits to 1 over paths 0 -> 2:", P.occ_weight_node(T6, 1)[0, 2])
