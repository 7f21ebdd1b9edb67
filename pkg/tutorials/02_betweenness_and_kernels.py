"""
Betweenness, kernels and distances
==================================

A random path is drawn with probability proportional to its weight. The
expected presence (or number of visits) of a node is its betweenness; the
covariances between nodes form kernels.
"""

import numpy as np

from bagofpaths import (
    WeightedGraph,
    bop_distance,
    build_weight_matrix,
    fundamental_matrix,
    kernel,
    occurrence_betweenness,
    presence_betweenness,
)

# A star: node 0 in the centre, four leaves, edges in both directions.
A = np.zeros((5, 5))
A[0, 1:] = A[1:, 0] = 1.0
T = fundamental_matrix(build_weight_matrix(WeightedGraph(A), beta=1.0))

for fw in ("regular", "hitting"):
    print(f"{fw:8s} presence  ", np.round(presence_betweenness(T, fw), 4))
    print(f"{fw:8s} occurrence", np.round(occurrence_betweenness(T, fw), 4))

# %%
# Eight kernels: presence or occurrence, regular or hitting paths,
# covariance or correlation.
for name in ("cov", "cor", "covh", "corh", "ncov", "ncor", "ncovh", "ncorh"):
    K = kernel(T, name).K
    print(f"{name:6s} min eigenvalue {np.linalg.eigvalsh(K)[0]: .2e}  K[1, 2] = {K[1, 2]: .4f}")

# %%
# The distance is -log of the hitting weights, symmetrised.
print(np.round(bop_distance(T).K, 3))

# %%
# For large beta, d / beta approaches the shortest-path distance; for small
# beta, longer detours also count. A 6-cycle with one chord:
from scipy.sparse.csgraph import shortest_path

C = np.zeros((6, 6))
for k in range(6):
    C[k, (k + 1) % 6] = C[(k + 1) % 6, k] = 1.0
C[0, 3] = C[3, 0] = 1.0
print("shortest paths from node 0:", shortest_path(C)[0])
for beta in (0.1, 1.0, 10.0, 50.0):
    D = bop_distance(fundamental_matrix(build_weight_matrix(WeightedGraph(C), beta))).K
    print(f"beta={beta:5}: d(0, .) / beta =", np.round(D[0] / beta, 2))
