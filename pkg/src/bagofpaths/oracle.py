"""Brute-force checks of the closed forms.

Two independent ways of summing ``f(p) w(p)`` over paths are provided:

* :func:`iter_paths` walks every path explicitly (depth-first, push/pop). It
  is exponential in the depth and only usable for short paths.
* :class:`PathEnumerator` computes exactly the same truncated sums, but
  groups paths of equal length by (source, current node, which tracked nodes
  were seen) or, for occurrence counts, by (source, current node) with running
  count moments. This is still a finite sum over every path of length
  ``<= L``. It uses no matrix inverse and none of the closed-form identities,
  so it is an independent check that also reaches depths of a few hundred.

The omitted tail (paths longer than ``L``) is bounded with the exact identity
``sum_{k > L} W^k = W^{L+1} (I - W)^-1`` and its moment analogues, which gives
a certified remainder for every entry.
"""
import itertools
from dataclasses import dataclass, field

import numpy as np

from .exceptions import SpectralRadiusError
from .graph import RHO_MARGIN, WeightedGraph, build_weight_matrix, spectral_radius
from .graph import WeightMatrix, validate_weight_matrix
from . import measures, paths

MAX_NODES = 8
MAX_DEPTH = 4096

#: kind -> (framework, statistic, mask selector or number of occurrence nodes)
KINDS = {
    "paths": ("regular", "presence", "all", 0),
    "hitting-paths": ("hitting", "presence", "all", 0),
    "via-node": ("regular", "presence", "has_all", 1),
    "avoid-node": ("regular", "presence", "has_none", 1),
    "hitting-avoid-node": ("hitting", "presence", "has_none", 1),
    "hitting-via-node": ("hitting", "presence", "has_all", 1),
    "via-pair": ("regular", "presence", "has_all", 2),
    "avoid-pair": ("regular", "presence", "has_none", 2),
    "hitting-avoid-pair": ("hitting", "presence", "has_none", 2),
    "hitting-via-pair": ("hitting", "presence", "has_all", 2),
    "avoid-set": ("regular", "presence", "has_none", None),
    "hitting-avoid-set": ("hitting", "presence", "has_none", None),
    "via-set": ("regular", "presence", "has_all", None),
    "hitting-via-set": ("hitting", "presence", "has_all", None),
    "occurrence": ("regular", "occurrence", None, 1),
    "co-occurrence": ("regular", "occurrence", None, 2),
    "hitting-occurrence": ("hitting", "occurrence", None, 1),
    "hitting-co-occurrence": ("hitting", "occurrence", None, 2),
}
_AGGREGATE_KINDS = ("normalizer", "presence-moment", "occurrence-moment")


@dataclass(frozen=True)
class QuantitySpec:
    """Address of one path-weight quantity.

    Parameters
    ----------
    kind : str
        a key of ``KINDS``, ``"normalizer"``, ``"presence-moment"`` or
        ``"occurrence-moment"``.
    nodes : tuple of int
        Constraint nodes (presence kinds) or statistic nodes (occurrence
        kinds and moments; one node for a first moment, two for a second).
    endpoints : (s, t) or None
        ``None`` sums over all sources and destinations.
    framework : str
        Only used by the aggregate kinds; the other kinds fix it.

    Aggregate kinds are *unnormalised*: they are ``sum f(p) w(p)``; divide by
    the matching ``normalizer`` to get a moment.
    """

    kind: str
    nodes: tuple = ()
    endpoints: tuple = None
    framework: str = "regular"

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(int(k) for k in self.nodes))
        if self.kind in KINDS:
            fw, stat, _, arity = KINDS[self.kind]
            object.__setattr__(self, "framework", fw)
            if arity is not None and len(self.nodes) != arity:
                raise ValueError(f"{self.kind} takes {arity} node(s), got {self.nodes}")
            if arity is None and not self.nodes:
                raise ValueError(f"{self.kind} needs a non-empty node set")
            if stat == "presence" and len(set(self.nodes)) != len(self.nodes):
                raise ValueError(f"{self.kind} needs distinct nodes, got {self.nodes}")
        elif self.kind in _AGGREGATE_KINDS:
            if self.framework not in measures.FRAMEWORKS:
                raise ValueError(f"unknown framework {self.framework!r}")
            want = (0,) if self.kind == "normalizer" else (1, 2)
            if len(self.nodes) not in want:
                raise ValueError(f"{self.kind} takes {want} node(s), got {self.nodes}")
        else:
            raise ValueError(f"unknown quantity kind {self.kind!r}")

    @property
    def statistic(self):
        if self.kind in KINDS:
            return KINDS[self.kind][1]
        return "occurrence" if self.kind == "occurrence-moment" else "presence"

    @property
    def moment_order(self):
        """Upper bound exponent: ``f(p) <= (len(p) + 1) ** order``."""
        return len(self.nodes) if self.statistic == "occurrence" else 0


@dataclass(frozen=True)
class EnumerationResult:
    """Truncated path sum ``value`` over paths of length ``<= depth``.

    The true (infinite) sum lies in ``[value, value + remainder_bound]`` for
    non-negative functionals.
    """

    value: object
    depth: int
    remainder_bound: object


# --- explicit enumeration -------------------------------------------------

def iter_paths(W, source, max_length):
    """Yield ``(path, weight)`` for every path from ``source`` of length ``<= max_length``.

    Paths are node tuples; zero-weight edges are skipped. The zero-length path
    ``(source,)`` has weight 1.
    """
    W = np.asarray(W, dtype=float)
    succ = [np.flatnonzero(W[u] > 0) for u in range(W.shape[0])]
    path = [source]
    weights = [1.0]

    def walk():
        yield tuple(path), weights[-1]
        if len(path) > max_length:
            return
        u = path[-1]
        for v in succ[u]:
            path.append(int(v))
            weights.append(weights[-1] * W[u, v])
            yield from walk()
            path.pop()
            weights.pop()

    yield from walk()


def path_functional(spec, path):
    """``f(path)`` for ``spec``: 0/1 constraint indicator or occurrence product.

    Returns 0 for a path that is not a hitting path when ``spec.framework``
    is ``hitting``.
    """
    if spec.framework == "hitting" and path[-1] in path[:-1]:
        return 0.0
    if spec.statistic == "occurrence":
        out = 1.0
        for k in spec.nodes:
            out *= path.count(k)
        return out
    if spec.kind in ("normalizer", "paths", "hitting-paths"):
        return 1.0
    seen = [k in path for k in spec.nodes]
    if spec.kind in KINDS and KINDS[spec.kind][2] == "has_none":
        return float(not any(seen))
    return float(all(seen))


def enumerate_by_dfs(W, spec, depth):
    """Explicit-path version of :func:`enumerate_quantity` (no remainder bound)."""
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    value = np.zeros((n, n))
    for s in range(n):
        for p, w in iter_paths(W, s, depth):
            f = path_functional(spec, p)
            if f:
                value[s, p[-1]] += f * w
    if spec.endpoints is None:
        return float(value.sum()) if spec.kind in _AGGREGATE_KINDS else value
    s, t = spec.endpoints
    return float(value[s, t])


# --- grouped enumeration --------------------------------------------------

class PathEnumerator:
    """Exact sums over all paths of length ``<= depth`` for one weight matrix.

    Results are cached per tracked-node tuple, so checking many quantities on
    the same graph is cheap.
    """

    def __init__(self, W, depth):
        W = np.asarray(W.W if isinstance(W, WeightMatrix) else W, dtype=float)
        n = W.shape[0]
        if n > MAX_NODES:
            raise ValueError(f"enumeration oracle is limited to n <= {MAX_NODES}, got {n}")
        if not 0 <= depth <= MAX_DEPTH:
            raise ValueError(f"depth must be in [0, {MAX_DEPTH}], got {depth}")
        if spectral_radius(W) >= 1.0 - RHO_MARGIN:
            raise SpectralRadiusError(spectral_radius(W), RHO_MARGIN)
        self.W = W
        self.n = n
        self.depth = depth
        self._cache = {}
        self._tails = None

    # Regular and hitting paths share one recursion: for hitting paths to
    # destination d the walk is not continued once it sits at d. The leading
    # axis of the state indexes d (a single dummy entry for regular paths).

    def _keep(self, hitting):
        n = self.n
        if not hitting:
            return None
        keep = np.ones((n, 1, 1, n))
        keep[np.arange(n), 0, 0, np.arange(n)] = 0.0
        return keep

    def presence(self, tracked, hitting=False):
        """``S[mask, s, t]``: path weight s -> t, split by visited tracked nodes.

        Bit ``b`` of ``mask`` is set when ``tracked[b]`` was visited.
        """
        tracked = tuple(int(k) for k in tracked)
        key = ("presence", tracked, hitting)
        if key in self._cache:
            return self._cache[key]
        n, W = self.n, self.W
        k = len(tracked)
        nmask = 1 << k
        bits = np.zeros(n, dtype=int)
        for b, node in enumerate(tracked):
            bits[node] |= 1 << b
        D = n if hitting else 1
        state = np.zeros((D, nmask, n, n))
        for s in range(n):
            state[:, bits[s], s, s] = 1.0
        total = state.copy()
        keep = self._keep(hitting)
        for _ in range(self.depth):
            if keep is not None:
                state = state * keep
            step = state @ W
            nxt = step.copy()
            for node in set(tracked):
                nxt[..., node] = 0.0
            for node in set(tracked):
                for mask in range(nmask):
                    nxt[:, mask | bits[node], :, node] += step[:, mask, :, node]
            state = nxt
            total += state
        if hitting:
            idx = np.arange(n)
            out = total[idx, :, :, idx]  # (dest, mask, source)
            out = np.transpose(out, (1, 2, 0))
        else:
            out = total[0]
        self._cache[key] = out
        return out

    def occurrence(self, a, b, hitting=False):
        """``(m0, ma, mb, mab)``: sums of ``w``, ``eta_a w``, ``eta_b w``, ``eta_a eta_b w``."""
        key = ("occurrence", int(a), int(b), hitting)
        if key in self._cache:
            return self._cache[key]
        n, W = self.n, self.W
        ea = np.zeros(n)
        ea[a] = 1.0
        eb = np.zeros(n)
        eb[b] = 1.0
        D = n if hitting else 1
        m0 = np.broadcast_to(np.eye(n), (D, n, n)).copy()
        ma = m0 * ea[None, :, None]
        mb = m0 * eb[None, :, None]
        mab = m0 * (ea * eb)[None, :, None]
        tot = [m.copy() for m in (m0, ma, mb, mab)]
        keep = None
        if hitting:
            keep = np.ones((n, 1, n))
            keep[np.arange(n), 0, np.arange(n)] = 0.0
        for _ in range(self.depth):
            if keep is not None:
                m0, ma, mb, mab = (m * keep for m in (m0, ma, mb, mab))
            p0, pa, pb, pab = (m @ W for m in (m0, ma, mb, mab))
            m0 = p0
            ma = pa + p0 * ea
            mb = pb + p0 * eb
            mab = pab + pa * eb + pb * ea + p0 * (ea * eb)
            for acc, m in zip(tot, (m0, ma, mb, mab)):
                acc += m
        if hitting:
            idx = np.arange(n)
            out = tuple(np.ascontiguousarray(m[idx, :, idx].T) for m in tot)
        else:
            out = tuple(m[0] for m in tot)
        self._cache[key] = out
        return out

    def tails(self):
        """Entrywise bounds on the omitted tail for ``f <= (len + 1) ** order``, order 0..2."""
        if self._tails is None:
            self._tails = tail_bounds(self.W, self.depth)
        return self._tails

    def matrix(self, spec):
        """Full ``(n, n)`` matrix over endpoints for a constrained-weight spec, or for the
        per-endpoint terms of an aggregate spec."""
        if spec.statistic == "occurrence":
            nodes = spec.nodes
            a, b = (nodes[0], nodes[0]) if len(nodes) == 1 else nodes
            m0, ma, mb, mab = self.occurrence(a, b, spec.framework == "hitting")
            return ma if len(nodes) == 1 else mab
        hitting = spec.framework == "hitting"
        if spec.kind in ("paths", "hitting-paths", "normalizer"):
            return self.presence((), hitting)[0]
        S = self.presence(spec.nodes, hitting)
        full = (1 << len(spec.nodes)) - 1
        if spec.kind in KINDS and KINDS[spec.kind][2] == "has_none":
            return S[0]
        return S[full]

    def quantity(self, spec):
        value = self.matrix(spec)
        bound = self.tails()[spec.moment_order]
        if spec.endpoints is None:
            if spec.kind in _AGGREGATE_KINDS:
                return EnumerationResult(float(value.sum()), self.depth, float(bound.sum()))
            return EnumerationResult(value.copy(), self.depth, bound.copy())
        s, t = spec.endpoints
        return EnumerationResult(float(value[s, t]), self.depth, float(bound[s, t]))


def tail_bounds(W, depth):
    """Entrywise upper bounds on ``sum_{k > depth} (k + 1)**m [W^k]`` for m = 0, 1, 2.

    With ``Z = (I - W)^-1`` and ``a = depth + 1``::

        m = 0:  W^a Z
        m = 1:  W^a (Z^2 + a Z)
        m = 2:  W^a (2 Z^3 - Z^2 + 2a Z^2 + a^2 Z)
    """
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    Z = np.linalg.inv(np.eye(n) - W)
    Z2 = Z @ Z
    Z3 = Z2 @ Z
    a = depth + 1
    Wa = np.linalg.matrix_power(W, a)
    return (
        np.maximum(Wa @ Z, 0.0),
        np.maximum(Wa @ (Z2 + a * Z), 0.0),
        np.maximum(Wa @ (2 * Z3 - Z2 + 2 * a * Z2 + a * a * Z), 0.0),
    )


def enumerate_quantity(W, spec, depth):
    """Sum ``f(p) w(p)`` over all paths of length ``<= depth`` selected by ``spec``.

    Returns
    -------
    EnumerationResult
        ``value`` is a float when ``spec.endpoints`` is set or the kind is an
        aggregate, else an ``(n, n)`` array; ``remainder_bound`` matches.
    """
    return PathEnumerator(W, depth).quantity(spec)


def depth_for(W, tol, order=2, start=8):
    """Smallest ``start * 2**k`` whose summed tail bound of ``order`` is below ``tol``."""
    depth = start
    while True:
        if float(tail_bounds(W, depth)[order].sum()) < tol:
            return depth
        if depth >= MAX_DEPTH:
            raise ValueError(f"tail bound still above {tol:g} at depth {MAX_DEPTH}")
        depth = min(2 * depth, MAX_DEPTH)


# --- full verification ----------------------------------------------------

REPORT_KINDS = tuple(KINDS) + (
    "normalizer-regular", "normalizer-hitting",
    "presence-regular", "presence-hitting",
    "occurrence-regular", "occurrence-hitting",
)

@dataclass
class KindReport:
    kind: str
    checks: int = 0
    max_deviation: float = 0.0
    max_bound: float = 0.0
    worst: str = ""
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures


@dataclass
class VerifyReport:
    tol: float
    depth: int
    n: int
    kinds: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(k.passed for k in self.kinds.values())

    def first_failure(self):
        for k in self.kinds.values():
            if not k.passed:
                return k
        return None

    def record(self, kind, closed, enum, label):
        row = self.kinds.setdefault(kind, KindReport(kind))
        closed = np.asarray(closed, dtype=float)
        value = np.asarray(enum.value, dtype=float)
        bound = np.asarray(enum.remainder_bound, dtype=float)
        dev = np.abs(closed - value)
        row.checks += dev.size
        k = int(np.argmax(dev - bound))
        worst_dev = float(dev.flat[k])
        if worst_dev > row.max_deviation:
            row.max_deviation = worst_dev
            row.worst = label if dev.ndim == 0 else f"{label} at (s,t)={np.unravel_index(k, dev.shape)}"
        row.max_bound = max(row.max_bound, float(bound.max()))
        bad = dev > self.tol + bound
        if np.any(bad):
            where = np.argwhere(bad)[0] if dev.ndim else ()
            row.failures.append(
                f"{label}{' at (s,t)=' + str(tuple(int(x) for x in where)) if dev.ndim else ''}: "
                f"deviation {float(dev[tuple(where)] if dev.ndim else dev):.3e}"
            )

    def to_text(self):
        lines = [
            f"n={self.n}  depth={self.depth}  tol={self.tol:g}",
            f"{'kind':<22}{'checks':>8}{'max |dev|':>12}{'max bound':>12}  status",
        ]
        for row in self.kinds.values():
            status = "ok" if row.passed else "FAIL " + row.failures[0]
            lines.append(
                f"{row.kind:<22}{row.checks:>8}{row.max_deviation:>12.2e}{row.max_bound:>12.2e}  {status}"
            )
        return "\n".join(lines)


def corrupted_tables(W, entry=(0, 0), delta=1e-3):
    """Closed-form tables built from a fundamental matrix with one entry shifted.

    Used to check that :func:`verify_all` actually catches errors.
    """
    wm = W if isinstance(W, WeightMatrix) else validate_weight_matrix(W)
    Z = paths.fundamental_matrix(wm).Z.copy()
    Z[entry] += delta
    return paths.tables_from_fundamental(wm, Z)


def verify_all(W, tol=1e-8, tables=None):
    """Compare every closed form against path enumeration on one graph.

    Covers every constrained-weight and occurrence kind for all valid index combinations (sets of size 2 and 3,
    every elimination order, all three forms of the pair-avoidance results),
    the two normalisers and the four moment families.

    Parameters
    ----------
    W : WeightMatrix or array_like
        ``n <= 8``.
    tol : float
        Allowed absolute deviation on top of the certified remainder.
    tables : PathWeightTables, optional
        Closed-form tables to check; computed from ``W`` by default. Passing
        corrupted tables is how fault injection is exercised.
    """
    wm = W if isinstance(W, WeightMatrix) else validate_weight_matrix(W)
    if wm.n > MAX_NODES:
        raise ValueError(f"verify_all is limited to n <= {MAX_NODES}")
    T = paths.fundamental_matrix(wm) if tables is None else tables
    depth = depth_for(wm.W, tol / 10.0)
    en = PathEnumerator(wm.W, depth)
    rep = VerifyReport(tol, depth, wm.n)
    for kind in REPORT_KINDS:
        rep.kinds[kind] = KindReport(kind)
    n = wm.n
    nodes = range(n)
    pairs = list(itertools.permutations(nodes, 2))
    sets = [c for k in (2, 3) for c in itertools.combinations(nodes, k)]

    def check(kind, closed, spec_nodes, label):
        rep.record(kind, closed, en.quantity(QuantitySpec(kind, spec_nodes)), label)

    check("paths", T.Z, (), "Z")
    check("hitting-paths", T.Zh, (), "Zh")
    for i in nodes:
        check("via-node", paths.z_plus_node(T, i), (i,), f"i={i}")
        check("avoid-node", paths.z_minus_node(T, i).M, (i,), f"i={i}")
        check("hitting-avoid-node", paths.zh_minus_node(T, i).M, (i,), f"i={i}")
        check("hitting-via-node", paths.zh_plus_node(T, i), (i,), f"i={i}")
    for i, j in pairs:
        check("via-pair", paths.z_plus_pair(T, i, j), (i, j), f"i={i},j={j}")
        for form in (1, 2, 3):
            check("avoid-pair", paths.z_minus_pair(T, i, j, form), (i, j), f"i={i},j={j},form={form}")
            check("hitting-avoid-pair", paths.zh_minus_pair(T, i, j, form), (i, j), f"i={i},j={j},form={form}")
        check("hitting-via-pair", paths.zh_plus_pair(T, i, j), (i, j), f"i={i},j={j}")
    for I in sets:
        for order in itertools.permutations(I):
            check("avoid-set", paths.z_minus_set(T, order), I, f"I={order}")
            check("hitting-avoid-set", paths.zh_minus_set(T, order), I, f"I={order}")
    for I in [(i,) for i in nodes] + sets:
        check("via-set", paths.z_plus_set(T, I), I, f"I={I}")
        check("hitting-via-set", paths.z_plus_set(T, I, hitting=True), I, f"I={I}")
    for i in nodes:
        check("occurrence", paths.occ_weight_node(T, i), (i,), f"i={i}")
        check("hitting-occurrence", paths.occ_hit_weight_node(T, i), (i,), f"i={i}")
    for i, j in itertools.product(nodes, nodes):
        check("co-occurrence", paths.occ_weight_pair(T, i, j), (i, j), f"i={i},j={j}")
        check("hitting-co-occurrence", paths.occ_hit_weight_pair(T, i, j), (i, j), f"i={i},j={j}")

    norms = {"regular": T.z_tot, "hitting": T.zh_tot}
    for fw, total in norms.items():
        rep.record(
            f"normalizer-{fw}", total,
            en.quantity(QuantitySpec("normalizer", (), framework=fw)), fw,
        )
    for stat in measures.STATISTICS:
        for fw in measures.FRAMEWORKS:
            ms = measures.moments(T, stat, fw)
            kind = f"{stat}-moment"
            label = f"{stat}-{fw}"
            for i in nodes:
                rep.record(
                    label, ms.first[i] * norms[fw],
                    en.quantity(QuantitySpec(kind, (i,), framework=fw)), f"E[x_{i}]",
                )
            for i, j in itertools.product(nodes, nodes):
                nodes_ij = (i,) if (i == j and stat == "presence") else (i, j)
                rep.record(
                    label, ms.second[i, j] * norms[fw],
                    en.quantity(QuantitySpec(kind, nodes_ij, framework=fw)), f"E[x_{i} x_{j}]",
                )
    return rep


# --- derivatives ----------------------------------------------------------

@dataclass
class FiniteDifferenceReport:
    samples: int
    h: float
    max_rel_first: float
    max_rel_second: float

    def passed(self, tol=1e-4):
        return self.max_rel_first < tol and self.max_rel_second < tol

    def to_text(self):
        return (
            f"finite differences: {self.samples} samples, h={self.h:g}, "
            f"max rel. error first={self.max_rel_first:.2e}, second={self.max_rel_second:.2e}"
        )


def finite_difference_check(W, samples=100, h=1e-6, seed=0):
    """Check ``dZ/dw_ij`` and ``d^2Z/dw_kl dw_ij`` against central differences.

    First derivatives use a central difference of ``(I - W)^-1`` with step
    ``h``. Second derivatives use a central difference (step ``h``, along
    ``w_ij``) of a complex-step derivative along ``w_kl``, which avoids the
    ``eps / h^2`` cancellation of a plain four-point stencil. Relative error
    is ``|fd - exact| / max(1, |exact|)``.
    """
    wm = W if isinstance(W, WeightMatrix) else validate_weight_matrix(W)
    Wm = wm.W
    n = wm.n
    if spectral_radius(Wm + h) >= 1.0 - RHO_MARGIN:
        h /= 10.0
        if spectral_radius(Wm + h) >= 1.0 - RHO_MARGIN:
            raise SpectralRadiusError(spectral_radius(Wm + h), RHO_MARGIN)
    T = paths.fundamental_matrix(wm)
    rng = np.random.default_rng(seed)
    I = np.eye(n)
    hc = 1e-30

    def z(delta):
        return np.linalg.inv(I - Wm - delta)

    worst1 = worst2 = 0.0
    for _ in range(samples):
        s, t, i, j, k, l = (int(x) for x in rng.integers(0, n, size=6))
        E = np.zeros((n, n))
        E[i, j] = 1.0
        F = np.zeros((n, n))
        F[k, l] = 1.0
        first, second = paths.weight_derivative_identities(T, i, j)
        fd1 = (z(h * E)[s, t] - z(-h * E)[s, t]) / (2 * h)
        exact1 = first[s, t]
        worst1 = max(worst1, abs(fd1 - exact1) / max(1.0, abs(exact1)))
        d_plus = z(h * E + 1j * hc * F)[s, t].imag / hc
        d_minus = z(-h * E + 1j * hc * F)[s, t].imag / hc
        fd2 = (d_plus - d_minus) / (2 * h)
        exact2 = second(k, l)[s, t]
        worst2 = max(worst2, abs(fd2 - exact2) / max(1.0, abs(exact2)))
    return FiniteDifferenceReport(samples, h, worst1, worst2)


# --- random test graphs and Monte Carlo -----------------------------------

def random_oracle_graph(n, rng, edge_prob=0.6, beta=1.0, affinity=(0.5, 2.0)):
    """Random strongly connected digraph and its bag-of-paths weights.

    Directed Erdos-Renyi edges with probability ``edge_prob`` plus a random
    Hamiltonian cycle; affinities uniform in ``affinity``; costs ``1/a``.

    Returns
    -------
    graph : WeightedGraph
    weights : WeightMatrix
    """
    rng = np.random.default_rng(rng)
    mask = rng.random((n, n)) < edge_prob
    np.fill_diagonal(mask, False)
    order = rng.permutation(n)
    mask[order, np.roll(order, -1)] = True
    if n == 1:
        mask[0, 0] = True
    A = np.where(mask, rng.uniform(*affinity, size=(n, n)), 0.0)
    g = WeightedGraph(A)
    return g, build_weight_matrix(g, beta)


def random_killed_chain(n, n_absorbing, rng, kill=0.2):
    """Random killed Markov chain with absorbing nodes.

    Transient rows sum to ``1 - kill`` (a walker dies with probability
    ``kill`` per step); absorbing rows are zero. Every transient node has an
    edge to some absorbing node. Returns ``(W, absorbing)``.
    """
    rng = np.random.default_rng(rng)
    m = n - n_absorbing
    absorbing = list(range(m, n))
    P = rng.random((n, n)) * (rng.random((n, n)) < 0.7)
    np.fill_diagonal(P, 0.0)
    for s in range(m):
        P[s, rng.choice(absorbing)] += rng.uniform(0.2, 1.0)
    P[absorbing, :] = 0.0
    P[:m] *= (1.0 - kill) / P[:m].sum(axis=1, keepdims=True)
    return validate_weight_matrix(P), absorbing


def monte_carlo_absorption(W, absorbing, s, walks, rng, max_steps=100_000):
    """Simulate killed random walks from ``s``; returns (probabilities, standard errors).

    A walker at a non-absorbing node moves to ``v`` with probability
    ``W[u, v]`` and is killed with probability ``1 - sum_v W[u, v]``; killed
    walks are discarded (the estimate is conditional on absorption).
    """
    W = np.asarray(W.W if isinstance(W, WeightMatrix) else W, dtype=float)
    rng = np.random.default_rng(rng)
    n = W.shape[0]
    cum = np.cumsum(np.hstack([W, (1.0 - W.sum(axis=1))[:, None]]), axis=1)
    is_abs = np.zeros(n + 1, dtype=bool)
    is_abs[absorbing] = True
    pos = np.full(walks, s)
    active = ~is_abs[pos]
    for _ in range(max_steps):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        u = pos[idx]
        r = rng.random(idx.size)
        v = (r[:, None] > cum[u]).sum(axis=1)
        pos[idx] = v
        active[idx] = (v < n) & ~is_abs[v]
    else:
        raise RuntimeError("walks did not terminate")
    done = pos[pos < n]
    counts = np.array([(done == a).sum() for a in absorbing], dtype=float)
    m = counts.sum()
    p = counts / m
    return p, np.sqrt(p * (1 - p) / m)
