import numpy as np
import pytest

from bagofpaths import fundamental_matrix, validate_weight_matrix
from bagofpaths.oracle import random_oracle_graph

G2_W = [[0.0, 0.5], [0.4, 0.0]]


@pytest.fixture
def g2():
    return fundamental_matrix(validate_weight_matrix(G2_W))


def random_tables(n, seed, **kw):
    g, wm = random_oracle_graph(n, np.random.default_rng(seed), **kw)
    return fundamental_matrix(wm)


@pytest.fixture
def rand5():
    return random_tables(5, 7)
