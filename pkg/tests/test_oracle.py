import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bagofpaths import SpectralRadiusError, validate_weight_matrix
from bagofpaths import oracle
from bagofpaths.oracle import (
    PathEnumerator,
    QuantitySpec,
    enumerate_by_dfs,
    enumerate_quantity,
    finite_difference_check,
    iter_paths,
    verify_all,
)

from bagofpaths.paths import z_plus_pair

from conftest import G2_W, random_tables

ALL_SPECS = [
    QuantitySpec("paths"), QuantitySpec("hitting-paths"),
    QuantitySpec("via-node", (1,)), QuantitySpec("avoid-node", (1,)), QuantitySpec("hitting-avoid-node", (2,)), QuantitySpec("hitting-via-node", (2,)),
    QuantitySpec("via-pair", (0, 2)), QuantitySpec("avoid-pair", (0, 2)), QuantitySpec("hitting-avoid-pair", (1, 3)), QuantitySpec("hitting-via-pair", (3, 1)),
    QuantitySpec("avoid-set", (0, 1, 3)), QuantitySpec("hitting-avoid-set", (0, 1, 3)),
    QuantitySpec("via-set", (1, 2, 3)), QuantitySpec("hitting-via-set", (1, 2, 3)),
    QuantitySpec("occurrence", (2,)), QuantitySpec("co-occurrence", (2, 2)), QuantitySpec("co-occurrence", (0, 3)),
    QuantitySpec("hitting-occurrence", (1,)), QuantitySpec("hitting-co-occurrence", (1, 1)), QuantitySpec("hitting-co-occurrence", (1, 2)),
    QuantitySpec("normalizer", framework="hitting"),
    QuantitySpec("presence-moment", (0, 1), framework="hitting"),
    QuantitySpec("occurrence-moment", (2,), framework="regular"),
]


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: f"{s.kind}{s.nodes}")
def test_grouped_sum_equals_explicit_paths(spec):
    W = random_tables(4, 5).W
    for depth in (0, 1, 4):
        grouped = enumerate_quantity(W, spec, depth).value
        explicit = enumerate_by_dfs(W, spec, depth)
        np.testing.assert_allclose(grouped, explicit, rtol=1e-13, atol=1e-15)


def test_iter_paths_counts():
    W = np.ones((3, 3)) * 0.1
    paths = list(iter_paths(W, 0, 2))
    assert len(paths) == 1 + 3 + 9
    assert paths[0] == ((0,), 1.0)
    assert all(len(p) <= 3 for p, _ in paths)


def test_g2_fundamental_entry():
    res = enumerate_quantity(G2_W, QuantitySpec("paths", endpoints=(0, 0)), 30)
    assert res.remainder_bound < 1e-9
    assert res.value <= 1.25 <= res.value + res.remainder_bound + 1e-15


def test_avoiding_destination_is_zero():
    W = random_tables(4, 2).W
    for depth in (0, 3, 10):
        assert enumerate_quantity(W, QuantitySpec("hitting-avoid-node", (2,), endpoints=(0, 2)), depth).value == 0.0


def test_zero_length_path():
    W = random_tables(3, 2).W
    assert enumerate_quantity(W, QuantitySpec("via-node", (1,), endpoints=(0, 0)), 0).value == 0.0
    assert enumerate_quantity(W, QuantitySpec("via-node", (0,), endpoints=(0, 0)), 0).value == 1.0


def test_truncation_monotone():
    T = random_tables(5, 8)
    spec = QuantitySpec("via-pair", (1, 2))
    closed = z_plus_pair(T, 1, 2)
    prev_v, prev_b = None, None
    for depth in (1, 2, 4, 8, 16, 32):
        r = enumerate_quantity(T.weights, spec, depth)
        assert np.all(r.remainder_bound >= 0)
        assert np.all(r.value <= closed + 1e-14)
        if prev_v is not None:
            assert np.all(r.value >= prev_v - 1e-15)
            assert np.all(r.remainder_bound <= prev_b + 1e-15)
        prev_v, prev_b = r.value, r.remainder_bound


@pytest.mark.parametrize("spec", [
    QuantitySpec("paths"), QuantitySpec("occurrence", (1,)), QuantitySpec("co-occurrence", (0, 2)), QuantitySpec("hitting-co-occurrence", (2, 2)),
], ids=lambda s: s.kind)
def test_remainder_bound_is_certified(spec):
    W = random_tables(5, 9).W
    deep = enumerate_quantity(W, spec, 400).value
    for depth in (2, 5, 10):
        r = enumerate_quantity(W, spec, depth)
        assert np.all(deep - r.value <= r.remainder_bound + 1e-12)


def test_normalizer_converges():
    T = random_tables(5, 4)
    for depth in (4, 16, 64):
        r = enumerate_quantity(T.weights, QuantitySpec("normalizer"), depth)
        assert 0 <= 1 - r.value / T.z_tot <= r.remainder_bound / T.z_tot + 1e-15


def test_spec_validation():
    with pytest.raises(ValueError):
        QuantitySpec("via-pair", (1,))
    with pytest.raises(ValueError):
        QuantitySpec("avoid-pair", (1, 1))
    with pytest.raises(ValueError):
        QuantitySpec("avoid-set", ())
    with pytest.raises(ValueError):
        QuantitySpec("no-such-kind")
    with pytest.raises(ValueError):
        QuantitySpec("normalizer", framework="other")
    assert QuantitySpec("hitting-avoid-pair", (0, 1)).framework == "hitting"


def test_guards():
    with pytest.raises(ValueError, match="n <= 8"):
        PathEnumerator(np.zeros((9, 9)), 3)
    with pytest.raises(ValueError, match="depth"):
        PathEnumerator(np.zeros((2, 2)), -1)
    with pytest.raises(SpectralRadiusError):
        PathEnumerator([[0, 1], [1, 0]], 3)


def test_verify_g2():
    rep = verify_all(G2_W, 1e-8)
    assert rep.passed, rep.to_text()
    assert list(rep.kinds) == list(oracle.REPORT_KINDS)


def test_verify_random_n5():
    g, wm = oracle.random_oracle_graph(5, np.random.default_rng(42))
    assert wm.rho <= 0.8
    rep = verify_all(wm, 1e-8)
    assert rep.passed, rep.to_text()


def test_verify_catches_corrupted_fundamental_matrix():
    _, wm = oracle.random_oracle_graph(4, np.random.default_rng(0))
    rep = verify_all(wm, 1e-8, oracle.corrupted_tables(wm, (1, 2), 1e-3))
    assert not rep.passed
    bad = rep.first_failure()
    assert bad.kind == "paths"
    assert "(1, 2)" in bad.failures[0]
    assert "FAIL" in rep.to_text()


def test_verify_size_guard():
    with pytest.raises(ValueError):
        verify_all(random_tables(9, 0).weights)


def test_finite_differences_g2():
    from bagofpaths import fundamental_matrix
    from bagofpaths.paths import weight_derivative_identities

    T = fundamental_matrix(validate_weight_matrix(G2_W))
    first, _ = weight_derivative_identities(T, 0, 1)
    h = 1e-6
    W = np.array(G2_W)
    E = np.zeros((2, 2))
    E[0, 1] = h
    fd = (np.linalg.inv(np.eye(2) - W - E)[0, 0] - np.linalg.inv(np.eye(2) - W + E)[0, 0]) / (2 * h)
    assert first[0, 0] == 0.625
    assert abs(fd - 0.625) / 0.625 < 1e-4
    assert finite_difference_check(G2_W, 50, h).passed()


def test_finite_differences_zero_matrix():
    rep = finite_difference_check(np.zeros((3, 3)), 50, 1e-6)
    assert rep.max_rel_first < 1e-9 and rep.max_rel_second < 1e-9


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_finite_differences_random(seed):
    rep = finite_difference_check(random_tables(4, seed).weights, 100, 1e-6, seed=seed)
    assert rep.passed(1e-4), rep.to_text()


def test_finite_difference_step_is_reduced_near_boundary():
    # perturbing every entry by h moves rho of [[0, a], [a, 0]] to a + 2h
    rep = finite_difference_check([[0, 0.999998], [0.999998, 0]], 5, 1e-6)
    assert rep.h == pytest.approx(1e-7)
    with pytest.raises(SpectralRadiusError):
        finite_difference_check([[0, 0.99999985], [0.99999985, 0]], 5, 1e-6)


def test_monte_carlo_helper():
    W = np.zeros((3, 3))
    W[0, 1] = W[0, 2] = 0.5
    p, se = oracle.monte_carlo_absorption(W, [1, 2], 0, 4000, 0)
    assert abs(p[0] - 0.5) < 4 * se[0]
