"""Graphs, reference random walks and bag-of-paths weight matrices.

Everything downstream is driven by a non-negative weight matrix ``W`` whose
spectral radius is strictly below one, so that the total weight of all paths,
``sum_k W^k = (I - W)^-1``, is finite. The standard instantiation is

    W = P_ref * exp(-beta * C)        (elementwise)

with ``P_ref = Diag(A e)^-1 A`` the natural random walk on the graph.
"""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components

from .exceptions import (
    ConvergenceError,
    GraphFormatError,
    NotStronglyConnectedError,
    SpectralRadiusError,
)

#: ``W`` is rejected when ``rho(W) >= 1 - RHO_MARGIN``.
RHO_MARGIN = 1e-9

_POWER_MAXITER = 2_000
_POWER_TOL = 1e-12
_DENSE_EIG_MAX_N = 64


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def is_strongly_connected(A):
    n = A.shape[0]
    if n == 0:
        return False
    ncomp, _ = connected_components(A > 0, directed=True, connection="strong")
    return ncomp == 1


@dataclass(frozen=True)
class WeightedGraph:
    """Directed graph with affinities ``A`` and edge costs ``C``.

    Parameters
    ----------
    A : (n, n) array_like
        Non-negative affinities; ``A[i, j] == 0`` means no edge.
    C : (n, n) array_like, optional
        Positive costs on edges. Defaults to ``1 / A`` on edges. Entries on
        non-edges are stored as ``+inf`` and never used.
    node_ids : sequence of int, optional
        External node labels, in internal index order. Defaults to ``1..n``.
    """

    A: np.ndarray
    C: np.ndarray = None
    node_ids: tuple = None

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be a square matrix")
        if not np.all(np.isfinite(A)) or np.any(A < 0):
            raise ValueError("affinities must be finite and non-negative")
        edges = A > 0
        if self.C is None:
            C = np.full(A.shape, np.inf)
            C[edges] = 1.0 / A[edges]
        else:
            C = np.array(self.C, dtype=float)
            if C.shape != A.shape:
                raise ValueError("C must have the same shape as A")
            on_edge = C[edges]
            if not np.all(np.isfinite(on_edge)) or np.any(on_edge <= 0):
                raise ValueError("costs must be finite and positive on every edge")
            C = np.where(edges, C, np.inf)
        n = A.shape[0]
        ids = tuple(range(1, n + 1)) if self.node_ids is None else tuple(int(i) for i in self.node_ids)
        if len(ids) != n or len(set(ids)) != n:
            raise ValueError("node_ids must be n distinct labels")
        if not is_strongly_connected(A):
            raise NotStronglyConnectedError("graph is not strongly connected")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "C", _frozen(C))
        object.__setattr__(self, "node_ids", ids)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def n_edges(self):
        return int(np.count_nonzero(self.A))

    def index_of(self, node_id):
        return self.node_ids.index(int(node_id))


@dataclass(frozen=True)
class WeightMatrix:
    """Validated non-negative weight matrix with ``rho(W) < 1 - RHO_MARGIN``.

    Build it with :func:`build_weight_matrix` or :func:`validate_weight_matrix`
    rather than directly.
    """

    W: np.ndarray
    rho: float
    beta: float = None
    node_ids: tuple = field(default=None, compare=False)

    @property
    def n(self):
        return self.W.shape[0]


def _parse_float(tok, what, lineno):
    try:
        x = float(tok)
    except ValueError:
        raise GraphFormatError(f"cannot parse {what} {tok!r}", lineno) from None
    if not np.isfinite(x):
        raise GraphFormatError(f"{what} must be finite, got {tok!r}", lineno)
    if x <= 0:
        raise GraphFormatError(f"non-positive {what} {tok!r}", lineno)
    return x


def _parse_id(tok, lineno):
    try:
        i = int(tok)
    except ValueError:
        raise GraphFormatError(f"node id must be an integer, got {tok!r}", lineno) from None
    if i < 1:
        raise GraphFormatError(f"node ids are 1-based, got {i}", lineno)
    return i


def read_edge_list(path):
    """Parse an edge-list file into ``(src, dst, affinity, cost-or-None)`` records.

    Lines are ``src dst affinity [cost]`` separated by tabs or spaces; blank
    lines and lines starting with ``#`` are skipped.
    """
    records = []
    seen = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            if len(toks) not in (3, 4):
                raise GraphFormatError(
                    f"expected 'src dst affinity [cost]', got {len(toks)} fields", lineno
                )
            src, dst = _parse_id(toks[0], lineno), _parse_id(toks[1], lineno)
            a = _parse_float(toks[2], "weight", lineno)
            c = _parse_float(toks[3], "cost", lineno) if len(toks) == 4 else None
            if (src, dst) in seen:
                raise GraphFormatError(f"duplicate edge {src} -> {dst}", lineno)
            seen.add((src, dst))
            records.append((src, dst, a, c))
    if not records:
        raise GraphFormatError(f"{path}: no edges")
    return records


def _records_to_arrays(records):
    ids = sorted({r[0] for r in records} | {r[1] for r in records})
    index = {node: k for k, node in enumerate(ids)}
    n = len(ids)
    A = np.zeros((n, n))
    C = np.full((n, n), np.inf)
    for src, dst, a, c in records:
        i, j = index[src], index[dst]
        A[i, j] = a
        C[i, j] = 1.0 / a if c is None else c
    return A, C, tuple(ids)


def load_graph(path):
    """Load a :class:`WeightedGraph` from an edge-list file.

    Costs default to the reciprocal of the affinity (affinities read as
    conductances). Raises :class:`GraphFormatError` on malformed input and
    :class:`NotStronglyConnectedError` when the graph is not strongly
    connected.
    """
    A, C, ids = _records_to_arrays(read_edge_list(Path(path)))
    return WeightedGraph(A, C, ids)


def load_weight_matrix(path):
    """Load a raw weight matrix ``W`` from an edge-list file (third column = w_ij).

    No connectivity requirement: killed chains are allowed.
    """
    records = read_edge_list(Path(path))
    W, _, ids = _records_to_arrays(records)
    return validate_weight_matrix(W, node_ids=ids)


def reference_transition_matrix(g):
    """Natural random walk ``P_ref = Diag(A e)^-1 A``."""
    A = g.A if isinstance(g, WeightedGraph) else np.asarray(g, dtype=float)
    deg = A.sum(axis=1)
    if np.any(deg <= 0):
        raise ValueError(f"node index {int(np.argmin(deg))} has zero out-degree")
    return A / deg[:, None]


def spectral_radius(W):
    """Perron root of a non-negative matrix.

    Small matrices use a dense eigensolver. Larger ones use power iteration on
    the shifted matrix ``I + |W|``; the shift keeps every iterate strictly
    positive, so the Collatz-Wielandt ratios ``(Bx)_i / x_i`` bracket the
    Perron root and their spread is a convergence certificate even for
    periodic matrices. For reducible matrices the bracket need not close;
    those fall back to the dense eigensolver.
    """
    W = np.abs(np.asarray(W, dtype=float))
    if not np.all(np.isfinite(W)):
        raise ValueError("W must be finite")
    n = W.shape[0]
    if n == 0:
        return 0.0
    if n <= _DENSE_EIG_MAX_N:
        return float(np.max(np.abs(np.linalg.eigvals(W))))
    x = np.full(n, 1.0 / n)
    for _ in range(_POWER_MAXITER):
        y = x + W @ x
        ratio = y / x
        lo, hi = ratio.min(), ratio.max()
        if hi - lo <= _POWER_TOL * hi:
            return max(0.5 * (lo + hi) - 1.0, 0.0)
        x = y / y.sum()
    try:
        return float(np.max(np.abs(np.linalg.eigvals(W))))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(
            f"power iteration did not converge in {_POWER_MAXITER} iterations "
            f"(bracket [{lo - 1:.6g}, {hi - 1:.6g}]) and the dense solver failed"
        ) from exc


def validate_weight_matrix(W, beta=None, node_ids=None):
    """Check ``W >= 0`` and ``rho(W) < 1 - RHO_MARGIN`` and wrap it.

    Strong connectivity is *not* required, so killed (absorbing) chains are
    accepted.
    """
    W = np.array(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W must be a square matrix")
    if not np.all(np.isfinite(W)):
        raise ValueError("W must be finite")
    if np.any(W < 0):
        i, j = np.argwhere(W < 0)[0]
        raise ValueError(f"negative entry W[{i}, {j}] = {W[i, j]:g}")
    rho = spectral_radius(W)
    if rho >= 1.0 - RHO_MARGIN:
        raise SpectralRadiusError(rho, RHO_MARGIN)
    return WeightMatrix(_frozen(W), rho, beta, node_ids)


def build_weight_matrix(g, beta):
    """Bag-of-paths weights ``W = P_ref * exp(-beta * C)``."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    P = reference_transition_matrix(g)
    with np.errstate(over="ignore"):
        W = np.where(g.A > 0, P * np.exp(-beta * np.where(g.A > 0, g.C, 0.0)), 0.0)
    return validate_weight_matrix(W, beta=float(beta), node_ids=g.node_ids)
