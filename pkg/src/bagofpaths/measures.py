"""Betweenness, covariance/correlation kernels and the bag-of-paths distance.

Paths are drawn with probability proportional to their weight, either from
all paths (``framework="regular"``) or from hitting paths only
(``framework="hitting"``). For every node we look at its *presence* on the
drawn path (0/1) or its number of *occurrences*; the first moments are
betweenness centralities and the centred second moments are kernels.

Hitting-path moments need, for every destination ``t``, the weights of paths
avoiding ``t``. These are built one ``t`` at a time in ``O(n^2)`` and
discarded, for ``O(n^3)`` time and ``O(n^2)`` memory overall.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateVarianceError, NumericalDegeneracyError
from .graph import WeightMatrix
from .paths import _guard, fundamental_matrix

FRAMEWORKS = ("regular", "hitting")
STATISTICS = ("presence", "occurrence")

#: kernel name -> (statistic, framework, correlation?)
KERNELS = {
    "cov": ("presence", "regular", False),
    "cor": ("presence", "regular", True),
    "covh": ("presence", "hitting", False),
    "corh": ("presence", "hitting", True),
    "ncov": ("occurrence", "regular", False),
    "ncor": ("occurrence", "regular", True),
    "ncovh": ("occurrence", "hitting", False),
    "ncorh": ("occurrence", "hitting", True),
}
DISTANCES = ("bopdist",)
METHODS = tuple(KERNELS) + DISTANCES

_DISPLAY = {
    "cov": "Cov", "cor": "Cor", "covh": "CovH", "corh": "CorH",
    "ncov": "NCov", "ncor": "NCor", "ncovh": "NCovH", "ncorh": "NCorH",
    "bopdist": "BoPDist",
}

_MIN_VARIANCE = 1e-14


def display_name(method):
    return _DISPLAY[method]


@dataclass(frozen=True)
class MomentSet:
    """First and second moments of presence or occurrence variables.

    ``first[i] = E[x_i]`` and ``second[i, j] = E[x_i x_j]`` where ``x_i`` is
    the presence indicator or occurrence count of node ``i``.
    """

    first: np.ndarray
    second: np.ndarray
    framework: str
    statistic: str

    def covariance(self):
        cov = self.second - np.outer(self.first, self.first)
        return 0.5 * (cov + cov.T)


@dataclass(frozen=True)
class KernelMatrix:
    method: str
    K: np.ndarray
    beta: float = None

    @property
    def is_distance(self):
        return self.method in DISTANCES


def _check_framework(framework):
    if framework not in FRAMEWORKS:
        raise ValueError(f"framework must be one of {FRAMEWORKS}, got {framework!r}")


def _avoid_slice_hitting(Zh, t):
    """``M[s, k] = z^{h(-t)}_{sk}`` (hitting paths s -> k avoiding t)."""
    den = 1.0 - Zh[:, t] * Zh[t, :]
    den[t] = 1.0
    _guard(den, f"hitting weights avoiding node {t}")
    M = (Zh - np.outer(Zh[:, t], Zh[t, :])) / den[None, :]
    np.fill_diagonal(M, 1.0)
    M[t, :] = 0.0
    M[:, t] = 0.0
    return M


def _avoid_slice_regular(Z, Zh, t):
    """``R[s, k] = z^{(-t)}_{sk}``."""
    R = Z - np.outer(Zh[:, t], Z[t, :])
    R[t, :] = 0.0
    R[:, t] = 0.0
    return R


# --- presence -------------------------------------------------------------

def _presence_regular(tables):
    Z, Zh = tables.Z, tables.Zh
    zh_col, z_row = tables.zh_col, tables.z_row
    first = zh_col * z_row
    # Q[i, j] = z^{h(-j)}_{.i}: hitting weight towards i avoiding j, summed over sources
    den = 1.0 - Zh * Zh.T
    np.fill_diagonal(den, 1.0)
    _guard(den, "regular co-presence")
    Q = (zh_col[:, None] - zh_col[None, :] * Zh.T) / den
    np.fill_diagonal(Q, 0.0)
    # z^{h(+i)}_{.j} = Q[i, j] Zh[i, j]
    T = (Q * Zh) * z_row[None, :]
    second = T + T.T
    second[np.diag_indices_from(second)] = first
    return first / tables.z_tot, second / tables.z_tot


def _presence_hitting(tables):
    Zh = tables.Zh
    n = tables.n
    first = tables.zh_col.copy()
    S = np.zeros((n, n))
    for t in range(n):
        M = _avoid_slice_hitting(Zh, t)
        c = M.sum(axis=0)  # c[k] = z^{h(-t)}_{.k}
        zt = Zh[:, t]
        ct = c * zt
        first += ct
        # P[i, j] = z^{h(-{j,t})}_{.i}
        den = 1.0 - M * M.T
        np.fill_diagonal(den, 1.0)
        _guard(den, f"hitting co-presence (destination {t})")
        P = (c[:, None] - c[None, :] * M.T) / den
        T = P * M * zt[None, :]
        np.fill_diagonal(T, 0.0)
        S += T + T.T
        S[np.diag_indices(n)] += ct
        # destination is one of the pair
        S[:, t] += ct
        S[t, :] += ct
        S[t, t] += tables.zh_col[t]
    return first / tables.zh_tot, S / tables.zh_tot


def presence_betweenness(tables, framework="regular"):
    """Probability that node ``i`` lies on a randomly drawn path."""
    return copresence_moments(tables, framework).first


def copresence_moments(tables, framework="regular"):
    """Presence moments ``E[delta_i]`` and ``E[delta_i delta_j]``."""
    _check_framework(framework)
    if framework == "regular":
        first, second = _presence_regular(tables)
    else:
        first, second = _presence_hitting(tables)
    return MomentSet(first, second, framework, "presence")


# --- occurrences ----------------------------------------------------------

def _occurrence_regular(tables):
    Z = tables.Z
    z_col, z_row = tables.z_col, tables.z_row
    first = z_col * z_row
    T = z_col[:, None] * Z * z_row[None, :]
    second = T + T.T
    second[np.diag_indices_from(second)] -= first
    return first / tables.z_tot, second / tables.z_tot


def _occurrence_hitting(tables):
    Z, Zh = tables.Z, tables.Zh
    n = tables.n
    first = tables.zh_col.copy()
    S = np.zeros((n, n))
    for t in range(n):
        R = _avoid_slice_regular(Z, Zh, t)
        r = R.sum(axis=0)  # r[k] = z^{(-t)}_{.k}
        zt = Zh[:, t]
        rt = r * zt
        first += rt
        T = r[:, None] * R * zt[None, :]
        S += T + T.T
        S[np.diag_indices(n)] -= rt
        S[:, t] += rt
        S[t, :] += rt
        S[t, t] += tables.zh_col[t]
    return first / tables.zh_tot, S / tables.zh_tot


def occurrence_betweenness(tables, framework="regular"):
    """Expected number of visits to node ``i`` on a randomly drawn path."""
    _check_framework(framework)
    if framework == "regular":
        return tables.z_col * tables.z_row / tables.z_tot
    Z, Zh = tables.Z, tables.Zh
    first = tables.zh_col.copy()
    for t in range(tables.n):
        r = _avoid_slice_regular(Z, Zh, t).sum(axis=0)
        first += r * Zh[:, t]
    return first / tables.zh_tot


def cooccurrence_moments(tables, framework="regular"):
    """Occurrence moments ``E[eta_i]`` and ``E[eta_i eta_j]``."""
    _check_framework(framework)
    if framework == "regular":
        first, second = _occurrence_regular(tables)
    else:
        first, second = _occurrence_hitting(tables)
    return MomentSet(first, second, framework, "occurrence")


def moments(tables, statistic, framework):
    if statistic == "presence":
        return copresence_moments(tables, framework)
    if statistic == "occurrence":
        return cooccurrence_moments(tables, framework)
    raise ValueError(f"statistic must be one of {STATISTICS}, got {statistic!r}")


# --- kernels and distance -------------------------------------------------

def correlation_from_covariance(cov):
    var = np.diag(cov).copy()
    bad = np.flatnonzero(var <= _MIN_VARIANCE)
    if bad.size:
        raise DegenerateVarianceError(int(bad[0]), float(var[bad[0]]))
    d = 1.0 / np.sqrt(var)
    cor = cov * d[:, None] * d[None, :]
    cor = 0.5 * (cor + cor.T)
    np.fill_diagonal(cor, 1.0)
    return cor


def kernel(tables, method):
    """Covariance or correlation kernel between nodes.

    Parameters
    ----------
    tables : PathWeightTables
    method : str
        One of ``cov, cor, covh, corh`` (presence on regular / hitting paths)
        or ``ncov, ncor, ncovh, ncorh`` (number of occurrences).

    Returns
    -------
    KernelMatrix
    """
    method = method.lower()
    if method not in KERNELS:
        hint = " (use bop_distance for bopdist)" if method in DISTANCES else ""
        raise ValueError(f"unknown kernel {method!r}{hint}")
    statistic, framework, correlate = KERNELS[method]
    cov = moments(tables, statistic, framework).covariance()
    K = correlation_from_covariance(cov) if correlate else cov
    return KernelMatrix(method, K, tables.weights.beta)


def bop_distance(tables):
    """Symmetrised ``-log Zh``: the bag-of-paths (free energy) distance.

    ``d[i, j] = (phi(i, j) + phi(j, i)) / 2`` with ``phi = -log Zh``, zero on
    the diagonal. It satisfies the triangle inequality because
    ``Zh[s, t] >= Zh[s, i] Zh[i, t]``.
    """
    Zh = tables.Zh
    if np.any(Zh <= 0):
        s, t = np.argwhere(Zh <= 0)[0]
        raise NumericalDegeneracyError(
            f"no path from node index {s} to {t}; the distance is infinite"
        )
    phi = -np.log(Zh)
    D = 0.5 * (phi + phi.T)
    np.fill_diagonal(D, 0.0)
    return KernelMatrix("bopdist", D, tables.weights.beta)


def compute(tables, method):
    """Dispatch to :func:`kernel` or :func:`bop_distance` by method name."""
    method = method.lower()
    if method == "bopdist":
        return bop_distance(tables)
    return kernel(tables, method)


# --- absorbing chains -----------------------------------------------------

def absorption_probability(weights, absorbing, s):
    """Probability of being absorbed at each node of ``absorbing`` from ``s``.

    ``W`` is a killed chain: the rows of absorbing nodes are zero, so paths
    stop on first arrival. Returns ``Z[s, a] / sum_b Z[s, b]`` over the
    absorbing nodes, in the order given.
    """
    if not isinstance(weights, WeightMatrix):
        from .graph import validate_weight_matrix

        weights = validate_weight_matrix(weights)
    absorbing = [int(a) for a in absorbing]
    if not absorbing:
        raise ValueError("absorbing set must be non-empty")
    W = weights.W
    live = np.flatnonzero(W[absorbing].sum(axis=1) > 0)
    if live.size:
        raise ValueError(f"absorbing node index {absorbing[live[0]]} has outgoing weight")
    z = fundamental_matrix(weights).Z[s, absorbing]
    total = z.sum()
    if total <= 0:
        raise NumericalDegeneracyError(f"no absorbing node is reachable from node index {s}")
    return z / total
