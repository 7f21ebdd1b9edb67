import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bagofpaths import (
    DegenerateVarianceError,
    absorption_probability,
    bop_distance,
    compute,
    cooccurrence_moments,
    copresence_moments,
    fundamental_matrix,
    kernel,
    occurrence_betweenness,
    presence_betweenness,
    validate_weight_matrix,
)
from bagofpaths import measures
from bagofpaths.oracle import PathEnumerator, monte_carlo_absorption, random_killed_chain

from conftest import random_tables

graphs = st.builds(random_tables, st.integers(2, 10), st.integers(0, 2**32 - 1))


# --- fixture: closed form vs enumeration ----------------------------------

@pytest.fixture
def g2_enum(g2):
    return PathEnumerator(g2.W, 120)


def test_g2_presence(g2, g2_enum):
    S = g2_enum.presence((0,))
    expect = S[1].sum() / S.sum()
    assert presence_betweenness(g2)[0] == pytest.approx(0.7241379310344828, abs=1e-12)
    assert presence_betweenness(g2)[0] == pytest.approx(expect, abs=1e-12)
    H = g2_enum.presence((0,), hitting=True)
    assert presence_betweenness(g2, "hitting")[0] == pytest.approx(H[1].sum() / H.sum(), abs=1e-12)
    assert presence_betweenness(g2, "hitting")[0] == pytest.approx(0.6551724137931034, abs=1e-12)


def test_g2_occurrence(g2, g2_enum):
    m0, ma, _, mab = g2_enum.occurrence(0, 0)
    assert occurrence_betweenness(g2)[0] == pytest.approx(ma.sum() / m0.sum(), abs=1e-12)
    assert occurrence_betweenness(g2)[0] == pytest.approx(0.9051724137931034, abs=1e-12)
    second = cooccurrence_moments(g2).second[0, 0]
    assert second == pytest.approx(mab.sum() / m0.sum(), abs=1e-12)
    assert second == pytest.approx(1.3577586206896552, abs=1e-12)


def test_g2_kernel_and_distance(g2):
    assert kernel(g2, "cov").K[0, 0] == pytest.approx(0.19976218787158145, abs=1e-12)
    d = bop_distance(g2).K
    assert d[0, 1] == pytest.approx(-(np.log(0.5) + np.log(0.4)) / 2, abs=1e-15)
    assert d[0, 1] == pytest.approx(0.8047189562170501, abs=1e-12)


# --- properties -----------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(graphs)
def test_betweenness_ranges(T):
    for fw in measures.FRAMEWORKS:
        pres = presence_betweenness(T, fw)
        assert np.all(pres >= -1e-12) and np.all(pres <= 1 + 1e-12)
        assert np.all(occurrence_betweenness(T, fw) >= pres - 1e-12)
        ms = copresence_moments(T, fw)
        np.testing.assert_allclose(np.diag(ms.second), ms.first, atol=1e-12)
        np.testing.assert_allclose(ms.second, ms.second.T, atol=1e-12)
        oc = cooccurrence_moments(T, fw)
        np.testing.assert_allclose(oc.first, occurrence_betweenness(T, fw), rtol=1e-12)
        np.testing.assert_allclose(oc.second, oc.second.T, rtol=1e-10, atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_kernels_are_valid(seed):
    T = random_tables(15, seed)
    for m in measures.KERNELS:
        K = kernel(T, m).K
        assert np.max(np.abs(K - K.T)) <= 1e-12 * max(1.0, np.abs(K).max())
        lam = np.linalg.eigvalsh(K)
        assert lam[0] >= -1e-8 * lam[-1]
        if measures.KERNELS[m][2]:
            np.testing.assert_allclose(np.diag(K), 1.0, atol=1e-10)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_distance_is_a_metric(seed):
    D = bop_distance(random_tables(12, seed)).K
    assert np.array_equal(D, D.T)
    assert np.all(np.diag(D) == 0)
    # viol[i, j, k] = d_ik - d_ij - d_jk
    viol = D[:, None, :] - D[:, :, None] - D[None, :, :]
    assert viol.max() <= 1e-12


def test_hitting_moments_against_enumeration():
    T = random_tables(6, 3)
    en = PathEnumerator(T.W, 200)
    ms = copresence_moments(T, "hitting")
    oc = cooccurrence_moments(T, "hitting")
    total = en.presence((), hitting=True)[0].sum()
    for i in range(T.n):
        for j in range(T.n):
            nodes = (i,) if i == j else (i, j)
            S = en.presence(nodes, hitting=True)
            assert ms.second[i, j] == pytest.approx(S[-1].sum() / total, abs=1e-10)
            assert oc.second[i, j] == pytest.approx(en.occurrence(i, j, True)[3].sum() / total, abs=1e-10)


def test_kernel_dispatch(g2):
    assert compute(g2, "BoPDist").is_distance
    assert compute(g2, "NCorH").method == "ncorh"
    with pytest.raises(ValueError, match="bop_distance"):
        kernel(g2, "bopdist")
    with pytest.raises(ValueError):
        kernel(g2, "katz")
    with pytest.raises(ValueError):
        presence_betweenness(g2, "sideways")


def test_correlation_needs_variance():
    # one node with a self-loop: every path visits it, presence never varies
    T = fundamental_matrix(validate_weight_matrix([[0.5]]))
    with pytest.raises(DegenerateVarianceError) as exc:
        kernel(T, "cor")
    assert exc.value.node == 0
    assert kernel(T, "cov").K[0, 0] == pytest.approx(0.0, abs=1e-15)


# --- absorbing chains -----------------------------------------------------

def test_absorption_simple_cases():
    W = np.zeros((3, 3))
    W[0, 1] = W[0, 2] = 0.5
    np.testing.assert_allclose(absorption_probability(W, [1, 2], 0), [0.5, 0.5])
    W = np.zeros((3, 3))
    W[0, 1] = 0.6
    W[1, 0] = 0.3
    W[1, 2] = 0.3
    np.testing.assert_allclose(absorption_probability(W, [2], 0), [1.0])


def test_absorption_rejects_live_rows():
    with pytest.raises(ValueError, match="outgoing"):
        absorption_probability([[0, 0.5], [0.5, 0]], [1], 0)


def test_absorption_denominator_uses_source_row():
    # the two candidate normalisations disagree on this chain
    wm, absorbing = random_killed_chain(5, 2, 0)
    Z = fundamental_matrix(wm).Z
    by_source = Z[0, absorbing] / Z[0, absorbing].sum()
    by_dest = Z[0, absorbing] / Z[np.ix_(absorbing, absorbing)].sum(axis=0)
    assert np.max(np.abs(by_source - by_dest)) > 0.05
    np.testing.assert_allclose(absorption_probability(wm, absorbing, 0), by_source)
    p, se = monte_carlo_absorption(wm, absorbing, 0, 20_000, 1)
    assert np.all(np.abs(p - by_source) <= 4 * se + 1e-12)
