r"""Total weights of constrained path sets, from the fundamental matrix.

Notation used throughout (all matrices are indexed ``[s, t]`` = source,
destination):

* ``Z = (I - W)^-1``: total weight of all (regular) paths from s to t.
* ``Zh``: total weight of *hitting* paths, on which t appears only at the
  end; ``Zh[s, t] = Z[s, t] / Z[t, t]``.
* ``z^{(+i)}`` / ``z^{(-i)}``: paths that visit / avoid node ``i``; the
  ``h`` variants restrict to hitting paths. Pairs and sets generalise this.

Occurrence sums (``occ_*``) weight each path by the number of times it
visits a node, instead of the presence indicator.

Every function here returns a dense ``(n, n)`` matrix over ``(s, t)`` for the
given constraint nodes, and costs ``O(n^2)`` except where noted.
"""
import itertools
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .exceptions import NumericalDegeneracyError
from .graph import WeightMatrix, validate_weight_matrix

#: Largest constraint set accepted by :func:`z_plus_set` (2**k terms).
MAX_INCLUSION_EXCLUSION = 20

_DENOM_FLOOR = 1e-12
_ILL_CONDITIONED = 1e8


def _frozen(a):
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PathWeightTables:
    """Fundamental and hitting matrices with their marginal sums.

    ``z_row[s] = sum_t Z[s, t]``, ``z_col[t] = sum_s Z[s, t]``,
    ``z_tot = Z.sum()``; same for the hitting matrix. ``condition`` is the
    1-norm condition number of ``I - W``.
    """

    weights: WeightMatrix
    Z: np.ndarray
    Zh: np.ndarray
    condition: float

    def __post_init__(self):
        for name, value in (
            ("z_row", self.Z.sum(axis=1)),
            ("z_col", self.Z.sum(axis=0)),
            ("z_tot", float(self.Z.sum())),
            ("zh_row", self.Zh.sum(axis=1)),
            ("zh_col", self.Zh.sum(axis=0)),
            ("zh_tot", float(self.Zh.sum())),
        ):
            object.__setattr__(self, name, value)

    @property
    def n(self):
        return self.Z.shape[0]

    @property
    def W(self):
        return self.weights.W


@dataclass(frozen=True)
class AvoidanceSlice:
    """Path weights avoiding node ``excluded``, as an ``(n, n)`` matrix ``M``."""

    excluded: int
    M: np.ndarray
    hitting: bool = False


def _hitting_from(Z):
    Zh = Z / np.diag(Z)[None, :]
    np.fill_diagonal(Zh, 1.0)
    return Zh


def tables_from_fundamental(weights, Z):
    """Wrap an already computed fundamental matrix (no checks besides shape).

    Mostly useful to build deliberately corrupted tables in fault-injection
    tests.
    """
    Z = np.array(Z, dtype=float)
    I_W = np.eye(weights.n) - weights.W
    cond = float(np.linalg.norm(I_W, 1) * np.linalg.norm(Z, 1))
    return PathWeightTables(weights, _frozen(Z), _frozen(_hitting_from(Z)), cond)


def fundamental_matrix(weights):
    """LU-solve ``(I - W) Z = I`` and build the hitting matrix.

    Parameters
    ----------
    weights : WeightMatrix or array_like
        A raw array is validated first.

    Returns
    -------
    PathWeightTables
    """
    if not isinstance(weights, WeightMatrix):
        weights = validate_weight_matrix(weights)
    n = weights.n
    if weights.rho > 0 and 1.0 / (1.0 - weights.rho) > _ILL_CONDITIONED:
        warnings.warn(
            f"1/(1 - rho) = {1.0 / (1.0 - weights.rho):.3g}: "
            "I - W is ill conditioned, expect loss of accuracy",
            RuntimeWarning,
            stacklevel=2,
        )
    I_W = np.eye(n) - weights.W
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", la.LinAlgWarning)
            lu = la.lu_factor(I_W, check_finite=False)
    except (la.LinAlgError, la.LinAlgWarning) as exc:
        raise NumericalDegeneracyError(f"I - W is numerically singular: {exc}") from exc
    Z = la.lu_solve(lu, np.eye(n), check_finite=False)
    cond = float(np.linalg.norm(I_W, 1) * np.linalg.norm(Z, 1))
    if not np.all(np.isfinite(Z)):
        raise NumericalDegeneracyError(f"non-finite fundamental matrix (condition ~ {cond:.3g})")
    # Z is a sum of non-negative matrices; clip last-bit negatives on non-reachable pairs
    Z = np.maximum(Z, 0.0)
    return PathWeightTables(weights, _frozen(Z), _frozen(_hitting_from(Z)), cond)


def hitting_matrix(tables):
    """``Zh[s, t] = Z[s, t] / Z[t, t]``, with an exact unit diagonal."""
    return tables.Zh.copy()


def _check_node(tables, *nodes):
    for i in nodes:
        if not 0 <= i < tables.n:
            raise IndexError(f"node index {i} out of range for n={tables.n}")


def _guard(den, what):
    bad = den < _DENOM_FLOOR
    if np.any(bad):
        raise NumericalDegeneracyError(
            f"denominator {np.min(den):.3g} below {_DENOM_FLOOR:g} in {what}"
        )


# --- one node -------------------------------------------------------------

def z_plus_node(tables, i):
    """Weight of paths s -> t visiting ``i``: ``Zh[s, i] Z[i, t]``."""
    _check_node(tables, i)
    return np.outer(tables.Zh[:, i], tables.Z[i, :])


def _z_minus(tables, i):
    M = tables.Z - np.outer(tables.Zh[:, i], tables.Z[i, :])
    M[i, :] = 0.0
    M[:, i] = 0.0
    return M


def z_minus_node(tables, i):
    """Weight of paths s -> t avoiding ``i``; zero on row and column ``i``."""
    _check_node(tables, i)
    return AvoidanceSlice(i, _z_minus(tables, i))


def _zh_minus(Zh, i):
    # avoid i, destination t: (Zh[s,t] - Zh[s,i] Zh[i,t]) / (1 - Zh[t,i] Zh[i,t])
    den = 1.0 - Zh[:, i] * Zh[i, :]
    den[i] = 1.0
    _guard(den, f"hitting weights avoiding node {i}")
    M = (Zh - np.outer(Zh[:, i], Zh[i, :])) / den[None, :]
    M[i, :] = 0.0
    M[:, i] = 0.0
    np.fill_diagonal(M, 1.0)
    M[i, i] = 0.0
    return M


def zh_minus_node(tables, i):
    """Weight of hitting paths s -> t avoiding ``i``.

    Zero when ``t == i`` (the destination cannot be avoided) or ``s == i``;
    one on the rest of the diagonal (the zero-length path).
    """
    _check_node(tables, i)
    return AvoidanceSlice(i, _zh_minus(tables.Zh, i), hitting=True)


def _zh_avoid_dest(Zh, k):
    """``G[s, t] = z^{h(-t)}_{s k}``: hitting paths s -> k avoiding t, over all t.

    Column ``t == k`` is set to zero (it is not a valid avoidance).
    """
    den = 1.0 - Zh[k, :] * Zh[:, k]
    den[k] = 1.0
    _guard(den, f"hitting weights towards node {k}")
    G = (Zh[:, k][:, None] - Zh * Zh[:, k][None, :]) / den[None, :]
    G[:, k] = 0.0
    # s == t avoided
    G[np.arange(len(G)), np.arange(len(G))] = 0.0
    # s == k != t: zero-length path
    G[k, :] = 1.0
    G[k, k] = 0.0
    return G


def zh_plus_node(tables, i):
    """Weight of hitting paths s -> t visiting ``i``.

    ``z^{h(-t)}_{si} Zh[i, t]`` for ``t != i`` and ``Zh[s, t]`` for ``t == i``.
    """
    _check_node(tables, i)
    Zh = tables.Zh
    M = _zh_avoid_dest(Zh, i) * Zh[i, :][None, :]
    M[:, i] = Zh[:, i]
    return M


# --- two nodes ------------------------------------------------------------

def _distinct(i, j):
    if i == j:
        raise ValueError("pair operations need i != j; use the single-node form")


def _zh_minus_col(Zh, avoid, dest):
    """Vector over s of hitting weights s -> ``dest`` avoiding ``avoid``."""
    if avoid == dest:
        return np.zeros(len(Zh))
    den = 1.0 - Zh[dest, avoid] * Zh[avoid, dest]
    _guard(np.array([den]), f"hitting weights avoiding node {avoid}")
    v = (Zh[:, dest] - Zh[:, avoid] * Zh[avoid, dest]) / den
    v[avoid] = 0.0
    v[dest] = 1.0
    return v


def z_plus_pair(tables, i, j):
    """Weight of paths s -> t visiting both ``i`` and ``j`` (``i != j``)."""
    _check_node(tables, i, j)
    _distinct(i, j)
    Z, Zh = tables.Z, tables.Zh
    # z^{h(+i)}_{sj} = z^{h(-j)}_{si} Zh[i, j]
    first_i = _zh_minus_col(Zh, j, i) * Zh[i, j]
    first_j = _zh_minus_col(Zh, i, j) * Zh[j, i]
    return np.outer(first_i, Z[j, :]) + np.outer(first_j, Z[i, :])


def z_minus_pair(tables, i, j, form=1):
    """Weight of paths s -> t avoiding both ``i`` and ``j``.

    The three ``form`` values are algebraically identical expressions:

    1. ``Z - z^{h(-j)}_{si} Z[i,t] - z^{h(-i)}_{sj} Z[j,t]``
    2. ``z^{(-j)} - z^{h(-j)}_{si} z^{(-j)}_{it}``
    3. ``z^{(-i)} - z^{h(-i)}_{sj} z^{(-i)}_{jt}``
    """
    _check_node(tables, i, j)
    _distinct(i, j)
    Z, Zh = tables.Z, tables.Zh
    if form == 1:
        M = Z - np.outer(_zh_minus_col(Zh, j, i), Z[i, :]) - np.outer(_zh_minus_col(Zh, i, j), Z[j, :])
    elif form == 2:
        R = _z_minus(tables, j)
        M = R - np.outer(_zh_minus_col(Zh, j, i), R[i, :])
    elif form == 3:
        R = _z_minus(tables, i)
        M = R - np.outer(_zh_minus_col(Zh, i, j), R[j, :])
    else:
        raise ValueError(f"form must be 1, 2 or 3, got {form!r}")
    for k in (i, j):
        M[k, :] = 0.0
        M[:, k] = 0.0
    return M


def zh_minus_pair(tables, i, j, form=1):
    """Weight of hitting paths s -> t avoiding both ``i`` and ``j``.

    Columns ``t in {i, j}`` are zero; rows ``s in {i, j}`` are zero; the
    remaining diagonal is one. ``form`` selects one of three equivalent
    expressions (see :func:`z_minus_pair`), each normalised at the
    destination.
    """
    _check_node(tables, i, j)
    _distinct(i, j)
    Zh = tables.Zh
    if form == 1:
        a = _zh_minus_col(Zh, j, i)
        b = _zh_minus_col(Zh, i, j)
        num = Zh - np.outer(a, Zh[i, :]) - np.outer(b, Zh[j, :])
        den = 1.0 - a * Zh[i, :] - b * Zh[j, :]
    elif form in (2, 3):
        keep, extra = (j, i) if form == 2 else (i, j)
        M = _zh_minus(Zh, keep)
        num = M - np.outer(M[:, extra], M[extra, :])
        den = 1.0 - M[:, extra] * M[extra, :]
    else:
        raise ValueError(f"form must be 1, 2 or 3, got {form!r}")
    den[[i, j]] = 1.0
    _guard(den, f"hitting weights avoiding {{{i}, {j}}}")
    out = num / den[None, :]
    np.fill_diagonal(out, 1.0)
    for k in (i, j):
        out[k, :] = 0.0
        out[:, k] = 0.0
    return out


def zh_plus_pair(tables, i, j):
    """Weight of hitting paths s -> t visiting both ``i`` and ``j``.

    For ``t`` outside the pair, hitting paths that reach ``i`` first (while
    avoiding ``j`` and ``t``) and then go on through ``j``, plus the mirrored
    term. For ``t == j`` it reduces to :func:`zh_plus_node` for ``i``, and
    symmetrically for ``t == i``.
    """
    _check_node(tables, i, j)
    _distinct(i, j)
    Zh = tables.Zh
    Gi = _zh_avoid_dest(Zh, i)  # Gi[s, t] = z^{h(-t)}_{si}
    Gj = _zh_avoid_dest(Zh, j)
    # inside the avoid-t world, additionally avoid j (resp. i)
    den = 1.0 - Gj[i, :] * Gi[j, :]
    den[[i, j]] = 1.0
    _guard(den, f"hitting weights visiting {{{i}, {j}}}")
    avoid_jt_to_i = (Gi - Gj * Gi[j, :][None, :]) / den[None, :]
    avoid_it_to_j = (Gj - Gi * Gj[i, :][None, :]) / den[None, :]
    through_j = Gj[i, :] * Zh[j, :]  # z^{h(+j)}_{it}
    through_i = Gi[j, :] * Zh[i, :]  # z^{h(+i)}_{jt}
    out = avoid_jt_to_i * through_j[None, :] + avoid_it_to_j * through_i[None, :]
    out[:, j] = Gi[:, j] * Zh[i, j]
    out[:, i] = Gj[:, i] * Zh[j, i]
    np.fill_diagonal(out, 0.0)
    return out


# --- node sets ------------------------------------------------------------

def _as_set(tables, nodes):
    nodes = [int(k) for k in nodes]
    if not nodes:
        raise ValueError("node set must be non-empty")
    if len(set(nodes)) != len(nodes):
        raise ValueError(f"node set has repeated entries: {nodes}")
    _check_node(tables, *nodes)
    return nodes


def z_minus_set(tables, nodes):
    """Weight of paths s -> t avoiding every node of ``nodes``.

    Nodes are eliminated one at a time, last to first: with ``S`` the nodes
    already removed,

        z^{(-S+i)} = z^{(-S)} - z^{h(-S)}_{si} z^{(-S)}_{it},
        z^{h(-S)}_{si} = z^{(-S)}_{si} / z^{(-S)}_{ii}.

    The result does not depend on the order, up to rounding.
    """
    nodes = _as_set(tables, nodes)
    M = _z_minus(tables, nodes[-1])
    for i in reversed(nodes[:-1]):
        pivot = M[i, i]
        _guard(np.array([pivot]), f"paths avoiding {nodes}")
        M = M - np.outer(M[:, i] / pivot, M[i, :])
    M[nodes, :] = 0.0
    M[:, nodes] = 0.0
    return M


def zh_minus_set(tables, nodes):
    """Weight of hitting paths s -> t avoiding ``nodes``; zero for ``t`` in the set."""
    nodes = _as_set(tables, nodes)
    M = z_minus_set(tables, nodes)
    d = np.diag(M).copy()
    d[nodes] = 1.0
    _guard(d, f"hitting paths avoiding {nodes}")
    out = M / d[None, :]
    free = np.setdiff1d(np.arange(tables.n), nodes)
    out[free, free] = 1.0
    out[:, nodes] = 0.0
    return out


def z_plus_set(tables, nodes, hitting=False):
    """Weight of (hitting) paths s -> t visiting *every* node of ``nodes``.

    Inclusion-exclusion over subsets ``S`` of the set:
    ``sum_S (-1)^|S| z^{(-S)}`` with ``z^{(-{})} = Z`` (``Zh`` if hitting).
    The cost is ``2^|nodes|`` avoidance evaluations.
    """
    nodes = _as_set(tables, nodes)
    if len(nodes) > MAX_INCLUSION_EXCLUSION:
        raise ValueError(
            f"|I| = {len(nodes)} exceeds the inclusion-exclusion cap {MAX_INCLUSION_EXCLUSION}"
        )
    avoid = zh_minus_set if hitting else z_minus_set
    out = (tables.Zh if hitting else tables.Z).copy()
    for k in range(1, len(nodes) + 1):
        for subset in itertools.combinations(nodes, k):
            out += (-1) ** k * avoid(tables, subset)
    return out


# --- occurrences ----------------------------------------------------------

def occ_weight_node(tables, i):
    """``sum_p eta(i in p) w(p)`` over paths s -> t: ``Z[s, i] Z[i, t]``."""
    _check_node(tables, i)
    return np.outer(tables.Z[:, i], tables.Z[i, :])


def occ_weight_pair(tables, i, j):
    """``sum_p eta(i) eta(j) w(p)`` over paths s -> t; ``i == j`` allowed."""
    _check_node(tables, i, j)
    Z = tables.Z
    out = Z[i, j] * np.outer(Z[:, i], Z[j, :]) + Z[j, i] * np.outer(Z[:, j], Z[i, :])
    if i == j:
        out -= np.outer(Z[:, i], Z[j, :])
    return out


def _z_avoid_dest(tables, k):
    """``G[s, t] = z^{(-t)}_{sk}``: regular paths s -> k avoiding t, over all t."""
    Z, Zh = tables.Z, tables.Zh
    G = Z[:, k][:, None] - Zh * Z[:, k][None, :]
    G[:, k] = 0.0
    np.fill_diagonal(G, 0.0)
    return G


def _z_avoid_entry(tables, a, b):
    """Vector over t of ``z^{(-t)}_{ab}``."""
    Z, Zh = tables.Z, tables.Zh
    v = Z[a, b] - Zh[a, :] * Z[:, b]
    v[[a, b]] = 0.0
    return v


def occ_hit_weight_node(tables, i):
    """``sum eta(i) w`` over hitting paths s -> t.

    ``z^{(-t)}_{si} Zh[i, t]``, plus ``Zh[s, t]`` when ``i == t``.
    """
    _check_node(tables, i)
    out = _z_avoid_dest(tables, i) * tables.Zh[i, :][None, :]
    out[:, i] += tables.Zh[:, i]
    return out


def occ_hit_weight_pair(tables, i, j):
    """``sum eta(i) eta(j) w`` over hitting paths s -> t; ``i == j`` allowed.

    Unlike the regular case, several Kronecker-delta terms survive because the
    destination is visited exactly once.
    """
    _check_node(tables, i, j)
    Zh = tables.Zh
    Gi = _z_avoid_dest(tables, i)
    Gj = _z_avoid_dest(tables, j)
    zij = _z_avoid_entry(tables, i, j)
    zji = _z_avoid_entry(tables, j, i)
    out = Gi * (zij * Zh[j, :])[None, :] + Gj * (zji * Zh[i, :])[None, :]
    if i == j:
        out -= Gi * Zh[j, :][None, :]
    out[:, j] += Gi[:, j] * Zh[i, j]
    out[:, i] += Gj[:, i] * Zh[j, i]
    if i == j:
        out[:, i] += Zh[:, i]
    return out


def weight_derivative_identities(tables, i, j):
    """Closed-form derivatives of ``Z`` with respect to ``w_ij``.

    Returns
    -------
    first : (n, n) ndarray
        ``d z_st / d w_ij = Z[s, i] Z[j, t]``.
    second : callable
        ``second(k, l)`` gives the matrix of ``d^2 z_st / d w_kl d w_ij
        = Z[s, k] Z[l, i] Z[j, t] + Z[s, i] Z[j, k] Z[l, t]``.
    """
    _check_node(tables, i, j)
    Z = tables.Z
    first = np.outer(Z[:, i], Z[j, :])

    def second(k, l):
        _check_node(tables, k, l)
        return Z[l, i] * np.outer(Z[:, k], Z[j, :]) + Z[j, k] * np.outer(Z[:, i], Z[l, :])

    return first, second
