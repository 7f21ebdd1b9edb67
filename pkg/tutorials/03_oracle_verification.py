"""
Checking the closed forms
=========================

Every closed form is compared with a direct sum over all paths up to some
length plus a certified bound on the longer ones.
"""

import numpy as np

from bagofpaths import oracle

rng = np.random.default_rng(42)
graph, W = oracle.random_oracle_graph(5, rng)
print(f"n={W.n}, rho(W)={W.rho:.3f}")

report = oracle.verify_all(W, tol=1e-8)
print(report.to_text())
print("passed:", report.passed)

# %%
# A wrong fundamental matrix is caught straight away.
bad = oracle.verify_all(W, tol=1e-8, tables=oracle.corrupted_tables(W))
print("first failing kind:", bad.first_failure().kind, "-", bad.first_failure().failures[0])

# %%
# Derivatives of Z with respect to single weights, against finite
# differences.
print(oracle.finite_difference_check(W, samples=100, h=1e-6).to_text())

# %%
# The explicit depth-first enumeration agrees with the grouped sums used
# above (it is much slower, so only short paths here).
spec = oracle.QuantitySpec("hitting-via-pair", (1, 3))
grouped = oracle.enumerate_quantity(W, spec, 5).value
explicit = oracle.enumerate_by_dfs(W.W, spec, 5)
print("max difference:", np.abs(grouped - explicit).max())
