"""Semi-supervised node classification from kernels and distances.

Node features are the leading eigenvectors of a kernel (distances are first
double-centred, as in classical multidimensional scaling). A one-vs-rest
L2-regularised logistic regression is trained on the labelled nodes and
predicts the rest. :func:`nested_cv` wraps everything in a repeated nested
cross-validation that tunes ``beta`` and the regularisation constant.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BagOfPathsError
from .graph import WeightedGraph, build_weight_matrix, is_strongly_connected
from . import measures, paths

BETA_GRID = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0)
REG_GRID = (1e-2, 1e-1, 1.0, 10.0, 100.0)
FEATURE_OPTIONS = ("sqrt-eigenvalue", "unit-norm")

_EIG_REL_CUTOFF = 1e-12
_TIE = 1e-9
_NEWTON_MAXITER = 200
_NEWTON_GTOL = 1e-8
_INTERCEPT_RIDGE = 1e-10


# --- features -------------------------------------------------------------

def center_distance_matrix(D):
    """Double-centre a distance matrix: ``K = -1/2 H D**2 H``, ``H = I - ee'/n``."""
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("D must be square")
    if not np.allclose(D, D.T, rtol=0, atol=1e-12 * max(1.0, np.abs(D).max())):
        raise ValueError("distance matrix is not symmetric")
    D2 = D * D
    D2 = D2 - D2.mean(axis=0, keepdims=True)
    D2 = D2 - D2.mean(axis=1, keepdims=True)
    K = -0.5 * D2
    return 0.5 * (K + K.T)


@dataclass(frozen=True)
class FeatureMatrix:
    X: np.ndarray
    option: str
    eigenvalues: np.ndarray

    @property
    def p(self):
        return self.X.shape[1]


def _fix_signs(U):
    idx = np.argmax(np.abs(U), axis=0)
    sign = np.sign(U[idx, np.arange(U.shape[1])])
    sign[sign == 0] = 1.0
    return U * sign


def extract_features(K, p=5, option="sqrt-eigenvalue"):
    """Leading-eigenvector node features of a kernel matrix.

    Eigenpairs are sorted by decreasing eigenvalue and those with eigenvalue
    ``<= 1e-12 * max`` are dropped. Each eigenvector's largest-magnitude
    component is made positive; eigenvalues equal within ``1e-12 * max`` are
    ordered by their (sign-fixed) eigenvectors, lexicographically descending.

    Parameters
    ----------
    K : (n, n) array_like
        Symmetric kernel.
    p : int
        Number of features; fewer are returned if fewer eigenvalues are
        positive.
    option : {"sqrt-eigenvalue", "unit-norm"}
        Scale eigenvectors by ``sqrt(lambda)``, or leave them unscaled and
        normalise every row to unit length.
    """
    if option not in FEATURE_OPTIONS:
        raise ValueError(f"option must be one of {FEATURE_OPTIONS}, got {option!r}")
    if p < 1:
        raise ValueError("p must be at least 1")
    K = np.asarray(K, dtype=float)
    scale = max(1.0, np.abs(K).max())
    if not np.allclose(K, K.T, rtol=0, atol=1e-10 * scale):
        raise ValueError("kernel matrix is not symmetric")
    lam, U = np.linalg.eigh(0.5 * (K + K.T))
    lam, U = lam[::-1], U[:, ::-1]
    if lam.size == 0 or lam[0] <= 0:
        raise BagOfPathsError("kernel has no positive eigenvalue")
    keep = lam > _EIG_REL_CUTOFF * lam[0]
    lam, U = lam[keep], _fix_signs(U[:, keep])
    # deterministic order inside eigenvalue clusters
    order = []
    start = 0
    tol = _EIG_REL_CUTOFF * lam[0]
    for k in range(1, lam.size + 1):
        if k == lam.size or lam[start] - lam[k] > tol:
            block = list(range(start, k))
            block.sort(key=lambda c: tuple(-U[:, c]))
            order.extend(block)
            start = k
    lam, U = lam[order][:p], U[:, order][:, :p]
    if option == "sqrt-eigenvalue":
        X = U * np.sqrt(lam)
    else:
        norms = np.linalg.norm(U, axis=1)
        if np.any(norms == 0):
            raise BagOfPathsError(f"node index {int(np.argmin(norms))} has an all-zero feature row")
        X = U / norms[:, None]
    return FeatureMatrix(X, option, lam)


def features_for(tables, method, p=5, option="sqrt-eigenvalue"):
    """Compute a kernel or distance and turn it into node features."""
    km = measures.compute(tables, method)
    K = center_distance_matrix(km.K) if km.is_distance else km.K
    return extract_features(K, p, option)


# --- classifier -----------------------------------------------------------

def _fit_logistic(X, T, regs):
    """Batched L2 logistic regressions.

    ``X`` is ``(m, d)`` with a trailing intercept column, ``T`` is ``(B, m)``
    0/1 targets and ``regs`` the per-problem weight ``C`` of the loss in
    ``C * sum(logloss) + |w|^2 / 2`` (intercept nearly unpenalised).
    Each problem stops independently, so results do not depend on batching.
    """
    B = T.shape[0]
    m, d = X.shape
    ridge = np.ones(d)
    ridge[-1] = _INTERCEPT_RIDGE
    C = np.asarray(regs, dtype=float)[:, None]
    theta = np.zeros((B, d))

    def objective(th):
        z = th @ X.T
        loss = np.logaddexp(0.0, z) - T * z
        return C[:, 0] * loss.sum(axis=1) + 0.5 * (th * th * ridge).sum(axis=1)

    f = objective(theta)
    active = np.ones(B, dtype=bool)
    for _ in range(_NEWTON_MAXITER):
        z = theta @ X.T
        sig = 0.5 * (1.0 + np.tanh(0.5 * z))
        grad = C * ((sig - T) @ X) + theta * ridge
        gnorm = np.abs(grad).max(axis=1)
        active &= gnorm > _NEWTON_GTOL
        if not active.any():
            break
        idx = np.flatnonzero(active)
        wts = C[idx] * sig[idx] * (1.0 - sig[idx])
        H = np.einsum("bm,mi,mj->bij", wts, X, X) + np.diag(ridge)[None]
        step = np.linalg.solve(H, grad[idx][..., None])[..., 0]
        slope = (grad[idx] * step).sum(axis=1)
        alpha = np.ones(idx.size)
        new = theta[idx] - step
        fnew = _objective_rows(objective, theta, idx, new)
        for _ in range(40):
            bad = fnew > f[idx] - 1e-4 * alpha * slope
            if not bad.any():
                break
            alpha[bad] *= 0.5
            new = theta[idx] - alpha[:, None] * step
            fnew = _objective_rows(objective, theta, idx, new)
        stalled = fnew >= f[idx]
        upd = ~stalled
        theta[idx[upd]] = new[upd]
        f[idx[upd]] = fnew[upd]
        active[idx[stalled]] = False
    return theta


def _objective_rows(objective, theta, idx, new):
    th = theta.copy()
    th[idx] = new
    return objective(th)[idx]


def _with_intercept(X):
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _argmax_low(scores):
    best = scores.max(axis=1, keepdims=True)
    return np.argmax(scores >= best - _TIE, axis=1)


def train_and_predict_many(X, train, y_train, test, regs):
    """Predictions on ``test`` for each regularisation constant in ``regs``.

    Returns an ``(len(regs), len(test))`` array of class labels.
    """
    X = np.asarray(X, dtype=float)
    y_train = np.asarray(y_train)
    classes = np.unique(y_train)
    if classes.size < 1:
        raise ValueError("no labelled nodes")
    Xtr = _with_intercept(X[train])
    Xte = _with_intercept(X[test])
    if classes.size == 1:
        return np.full((len(regs), len(test)), classes[0])
    targets = (y_train[None, :] == classes[:, None]).astype(float)
    R, K = len(regs), classes.size
    T = np.repeat(targets[None], R, axis=0).reshape(R * K, -1)
    Cs = np.repeat(np.asarray(regs, dtype=float), K)
    theta = _fit_logistic(Xtr, T, Cs).reshape(R, K, -1)
    scores = np.einsum("rkd,md->rmk", theta, Xte)
    return classes[np.stack([_argmax_low(s) for s in scores])]


def train_and_predict(X, labels, reg=1.0):
    """Classify unlabelled nodes with a one-vs-rest logistic regression.

    Parameters
    ----------
    X : (n, p) array_like or FeatureMatrix
    labels : (n,) array_like of int
        Class ids for labelled nodes, negative for unlabelled ones.
    reg : float
        Loss weight ``C`` (larger = weaker regularisation).

    Returns
    -------
    ndarray
        Predicted class ids for the unlabelled nodes, in index order. Ties go
        to the lowest class id.
    """
    if isinstance(X, FeatureMatrix):
        X = X.X
    labels = np.asarray(labels)
    train = np.flatnonzero(labels >= 0)
    test = np.flatnonzero(labels < 0)
    if train.size == 0:
        raise ValueError("no labelled nodes")
    return train_and_predict_many(X, train, labels[train], test, [reg])[0]


# --- cross-validation -----------------------------------------------------

def stratified_folds(labels, folds, rng):
    """Assign nodes to ``folds`` folds, balancing classes.

    Nodes are grouped by class (ascending id), shuffled within each class,
    concatenated and dealt round-robin, so every fold size is
    ``floor`` or ``ceil`` of ``n / folds`` and per-class counts differ by at
    most one between folds.
    """
    labels = np.asarray(labels)
    order = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        order.extend(rng.permutation(members))
    fold_of = np.empty(labels.size, dtype=int)
    fold_of[np.asarray(order, dtype=int)] = np.arange(labels.size) % folds
    return fold_of


@dataclass
class CvReport:
    """Outcome of one nested cross-validation run for one feature option.

    ``accuracy[r, f]`` is the hidden-node accuracy of outer fold ``f`` in
    repetition ``r``; ``selected[r][f]`` the chosen ``(beta, reg)``.
    """

    method: str
    option: str
    seed: int
    accuracy: np.ndarray
    selected: list
    dropped_betas: tuple = ()

    @property
    def mean_accuracy(self):
        return float(self.accuracy.mean())

    def to_csv(self):
        lines = ["rep,fold,accuracy,beta,reg"]
        for r in range(self.accuracy.shape[0]):
            for f in range(self.accuracy.shape[1]):
                beta, reg = self.selected[r][f]
                lines.append(f"{r + 1},{f + 1},{self.accuracy[r, f]:.17g},{beta:.17g},{reg:.17g}")
        return "\n".join(lines) + "\n"


@dataclass
class _Grid:
    betas: list
    feats: dict = field(default_factory=dict)  # (beta, option) -> X
    dropped: list = field(default_factory=list)


def _feature_grid(g, method, betas, p, options):
    grid = _Grid([])
    for beta in betas:
        try:
            T = paths.fundamental_matrix(build_weight_matrix(g, beta))
            km = measures.compute(T, method)
            K = center_distance_matrix(km.K) if km.is_distance else km.K
            feats = {opt: extract_features(K, p, opt).X for opt in options}
        except BagOfPathsError as exc:
            warnings.warn(f"{method}: beta={beta:g} skipped ({exc})", RuntimeWarning, stacklevel=3)
            grid.dropped.append(beta)
            continue
        grid.betas.append(beta)
        for opt, X in feats.items():
            grid.feats[beta, opt] = X
    if not grid.betas:
        raise BagOfPathsError(f"{method}: no beta in the grid gives a usable kernel")
    return grid


def _select(grid, option, labelled, y, inner_fold, inner_folds, regs):
    """Best (beta, reg) by mean inner accuracy; ties go to the smaller beta, then reg."""
    best, best_acc = None, -1.0
    for beta in grid.betas:
        X = grid.feats[beta, option]
        acc = np.zeros(len(regs))
        for k in range(inner_folds):
            val = labelled[inner_fold == k]
            tr = labelled[inner_fold != k]
            pred = train_and_predict_many(X, tr, y[tr], val, regs)
            acc += (pred == y[val][None, :]).mean(axis=1)
        acc /= inner_folds
        r = int(np.argmax(acc))
        if acc[r] > best_acc + 1e-12:
            best, best_acc = (beta, regs[r]), acc[r]
    return best


def nested_cv(g, labels, method, seed=0, *, rate=0.2, folds=5, reps=5, inner_folds=5,
              betas=BETA_GRID, regs=REG_GRID, p=5, options=FEATURE_OPTIONS):
    """Repeated nested cross-validation of one kernel method.

    In every repetition the nodes are split into ``folds`` stratified folds.
    Each fold in turn is the labelled set (``rate = 1 / folds`` of the
    nodes); the other nodes are hidden and predicted. ``beta`` and ``reg``
    are chosen by an ``inner_folds``-fold cross-validation inside the
    labelled set. Folds depend only on ``seed`` and ``labels``, so they are
    shared by all methods.

    Features depend on ``beta`` only and are computed once on the whole
    graph (the setting is transductive). Betas whose kernel is degenerate are
    dropped with a warning.

    Returns
    -------
    dict
        ``option -> CvReport``.
    """
    if not isinstance(g, WeightedGraph):
        raise TypeError("g must be a WeightedGraph")
    y = np.asarray(labels)
    if y.shape != (g.n,):
        raise ValueError(f"need one label per node ({g.n}), got {y.shape}")
    if not np.isclose(rate * folds, 1.0):
        raise ValueError(f"labelling rate {rate} must equal 1/folds (folds={folds})")
    classes, counts = np.unique(y, return_counts=True)
    if counts.min() < folds:
        raise ValueError(
            f"class {classes[np.argmin(counts)]} has {counts.min()} nodes; "
            f"at least {folds} are needed"
        )
    regs = list(regs)
    grid = _feature_grid(g, method, list(betas), p, options)
    acc = {opt: np.zeros((reps, folds)) for opt in options}
    sel = {opt: [[None] * folds for _ in range(reps)] for opt in options}
    for r in range(reps):
        rng = np.random.default_rng([seed, r])
        outer = stratified_folds(y, folds, rng)
        for f in range(folds):
            labelled = np.flatnonzero(outer == f)
            hidden = np.flatnonzero(outer != f)
            inner = stratified_folds(y[labelled], inner_folds, rng)
            for opt in options:
                beta, reg = _select(grid, opt, labelled, y, inner, inner_folds, regs)
                pred = train_and_predict_many(grid.feats[beta, opt], labelled, y[labelled], hidden, [reg])[0]
                acc[opt][r, f] = float((pred == y[hidden]).mean())
                sel[opt][r][f] = (beta, reg)
    return {
        opt: CvReport(method, opt, seed, acc[opt], sel[opt], tuple(grid.dropped))
        for opt in options
    }


# --- synthetic graphs -----------------------------------------------------

def sbm_generate(n=100, blocks=2, p_in=0.1, p_out=0.01, seed=0, max_tries=100):
    """Undirected stochastic block model with unit affinities.

    Nodes are split into ``blocks`` contiguous blocks of near-equal size.
    Draws are repeated until the graph is connected.

    Returns
    -------
    graph : WeightedGraph
    labels : ndarray of int
        Block id (0-based) of every node.
    """
    for name, prob in (("p_in", p_in), ("p_out", p_out)):
        if not 0.0 <= prob <= 1.0:
            raise ValueError(f"{name} must be a probability, got {prob}")
    if not 1 <= blocks <= n:
        raise ValueError("need 1 <= blocks <= n")
    labels = np.repeat(np.arange(blocks), [len(a) for a in np.array_split(np.arange(n), blocks)])
    P = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    for _ in range(max_tries):
        upper = rng.random(iu[0].size) < P[iu]
        A = np.zeros((n, n))
        A[iu[0][upper], iu[1][upper]] = 1.0
        A = A + A.T
        if is_strongly_connected(A):
            return WeightedGraph(A), labels
    raise BagOfPathsError(f"no connected graph in {max_tries} draws")
