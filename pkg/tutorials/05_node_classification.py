"""
Semi-supervised node classification
===================================

Kernel eigenvectors as node features, a linear classifier trained on 20%
of the nodes, hyperparameters picked by nested cross-validation.
"""

import numpy as np

from bagofpaths import build_weight_matrix, fundamental_matrix
from bagofpaths import semisupervised as ss

graph, labels = ss.sbm_generate(n=100, blocks=2, p_in=0.1, p_out=0.01, seed=1)
print(f"{graph.n} nodes, {graph.n_edges // 2} edges, class sizes {np.bincount(labels)}")

# %%
# Features for one kernel at a fixed beta.
T = fundamental_matrix(build_weight_matrix(graph, beta=1.0))
F = ss.features_for(T, "corh", p=5)
print("leading eigenvalues:", np.round(F.eigenvalues, 3))

# Train on every fifth node, predict the rest.
partial = labels.copy()
partial[np.arange(100) % 5 != 0] = -1
pred = ss.train_and_predict(F, partial, reg=1.0)
print("accuracy on hidden nodes:", np.mean(pred == labels[partial < 0]))

# %%
# Nested cross-validation (one repetition and a short beta grid, to keep the
# example quick).
for method in ("corh", "bopdist"):
    reports = ss.nested_cv(graph, labels, method, seed=0, reps=1, betas=(0.01, 0.1, 1.0))
    for option, rep in reports.items():
        print(f"{method:8s} {option:16s} mean accuracy {rep.mean_accuracy:.3f}")
