"""Command-line interface.

Exit codes: 0 success, 1 invalid input or failed check, 2 I/O error.
"""
import argparse
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io, measures, oracle, paths, semisupervised
from .exceptions import BagOfPathsError, DegenerateVarianceError
from .graph import build_weight_matrix, load_graph, load_weight_matrix

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2

_MEASURES = {
    "presence": ("presence", "regular"),
    "presence-hitting": ("presence", "hitting"),
    "occurrence": ("occurrence", "regular"),
    "occurrence-hitting": ("occurrence", "hitting"),
}


class _Parser(argparse.ArgumentParser):
    # usage errors are validation failures, not I/O failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_DOMAIN, f"{self.prog}: error: {message}\n")


def _positive(x):
    v = float(x)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {x}")
    return v


def _probability(x):
    v = float(x)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {x}")
    return v


def _count(x):
    v = int(x)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {x}")
    return v


def _workers(threads):
    return threads if threads > 0 else (os.cpu_count() or 1)


def _load_weights(args):
    """Return ``(weights, node_ids)`` from ``--graph`` + ``--beta`` or a raw W file."""
    if args.weights_direct:
        wm = load_weight_matrix(args.graph)
        return wm, wm.node_ids
    if args.beta is None:
        raise BagOfPathsError("--beta is required unless --weights-direct is given")
    g = load_graph(args.graph)
    return build_weight_matrix(g, args.beta), g.node_ids


def _add_weight_args(p):
    p.add_argument("--graph", required=True, help="edge list: src dst affinity [cost]")
    p.add_argument("--beta", type=_positive, help="inverse temperature")
    p.add_argument("--weights-direct", action="store_true",
                   help="read the third column as W itself (no graph model, no beta)")


# --- commands -------------------------------------------------------------

def cmd_validate(args):
    wm, ids = _load_weights(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        T = paths.fundamental_matrix(wm)
    print(f"nodes: {wm.n}")
    print(f"edges: {int(np.count_nonzero(wm.W))}")
    print(f"spectral radius: {wm.rho:.12g}")
    print(f"condition number of I - W: {T.condition:.6g}")
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return EXIT_OK


def cmd_kernel(args):
    wm, ids = _load_weights(args)
    T = paths.fundamental_matrix(wm)
    try:
        km = measures.compute(T, args.method)
    except DegenerateVarianceError as exc:
        raise BagOfPathsError(
            f"variance of node {ids[exc.node]} is {exc.variance:.3g}; correlation is undefined"
        ) from None
    io.write_matrix_csv(args.out, km.K, ids)
    return EXIT_OK


def cmd_betweenness(args):
    wm, ids = _load_weights(args)
    T = paths.fundamental_matrix(wm)
    stat, fw = _MEASURES[args.measure]
    if stat == "presence":
        values = measures.presence_betweenness(T, fw)
    else:
        values = measures.occurrence_betweenness(T, fw)
    io.write_vector_tsv(args.out, ids, values)
    return EXIT_OK


def cmd_absorb(args):
    wm = load_weight_matrix(args.graph)
    ids = wm.node_ids
    index = {k: i for i, k in enumerate(ids)}
    try:
        absorbing = [index[int(a)] for a in args.absorbing.split(",")]
        s = index[args.source]
    except (KeyError, ValueError):
        raise BagOfPathsError("--absorbing and --source must be node ids of the file") from None
    probs = measures.absorption_probability(wm, absorbing, s)
    for a, p in zip(absorbing, probs):
        print(f"{ids[a]}\t{p:.17g}")
    return EXIT_OK


def cmd_verify(args):
    if args.trials == 0:
        print("warning: trials=0, nothing verified", file=sys.stderr)
        return EXIT_OK
    if not 3 <= args.max_n <= oracle.MAX_NODES:
        raise BagOfPathsError(f"--max-n must be in [3, {oracle.MAX_NODES}]")
    rng = np.random.default_rng(args.seed)
    ok = True
    for k in range(args.trials):
        n = int(rng.integers(3, args.max_n + 1))
        g, wm = oracle.random_oracle_graph(n, rng)
        tables = oracle.corrupted_tables(wm) if args.inject_fault else None
        rep = oracle.verify_all(wm, args.tol, tables)
        fd = oracle.finite_difference_check(wm, args.fd_samples, args.fd_step, seed=int(rng.integers(2**31)))
        fd_ok = fd.passed(args.fd_tol)
        status = "pass" if rep.passed and fd_ok else "FAIL"
        print(f"== trial {k + 1}/{args.trials}: {status}")
        print(rep.to_text())
        print(fd.to_text() + ("" if fd_ok else f"  FAIL (tolerance {args.fd_tol:g})"))
        if not rep.passed:
            bad = rep.first_failure()
            print(f"first failure: {bad.kind}: {bad.failures[0]}")
        ok &= rep.passed and fd_ok
    print("all checks passed" if ok else "verification FAILED")
    return EXIT_OK if ok else EXIT_DOMAIN


def _parse_methods(spec):
    if spec == "all":
        return list(measures.METHODS)
    methods = [m.strip().lower() for m in spec.split(",") if m.strip()]
    unknown = [m for m in methods if m not in measures.METHODS]
    if unknown or not methods:
        raise BagOfPathsError(f"unknown method(s) {unknown}; choose from {measures.METHODS}")
    return methods


def classify_reports(g, labels, methods, seed, rate, folds, reps, threads=1, **kw):
    """Run :func:`nested_cv` for several methods; results are in ``methods`` order."""

    def run(m):
        return semisupervised.nested_cv(g, labels, m, seed, rate=rate, folds=folds, reps=reps, **kw)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if threads == 1:
            results = [run(m) for m in methods]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(run, methods))
    return dict(zip(methods, results))


def summary_text(reports):
    opts = semisupervised.FEATURE_OPTIONS
    lines = [f"{'method':<10}" + "".join(f"{o:>18}" for o in opts)]
    for m, by_opt in reports.items():
        lines.append(f"{measures.display_name(m):<10}" + "".join(f"{by_opt[o].mean_accuracy:>18.4f}" for o in opts))
    return "\n".join(lines) + "\n"


def cmd_classify(args):
    methods = _parse_methods(args.methods)
    if args.beta_grid:
        betas = [float(b) for b in args.beta_grid.split(",")]
        if any(not b > 0 for b in betas):
            raise BagOfPathsError("--beta-grid values must be positive")
    else:
        betas = semisupervised.BETA_GRID
    g = load_graph(args.graph)
    labels = io.labels_for(g.node_ids, io.read_labels(args.labels))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = classify_reports(
        g, labels, methods, args.seed, args.rate, args.folds, args.reps,
        threads=_workers(args.threads), betas=betas,
    )
    rows = ["method,option,mean_accuracy"]
    for m, by_opt in reports.items():
        for opt, rep in by_opt.items():
            (out / f"{m}_{opt}.csv").write_text(rep.to_csv())
            rows.append(f"{m},{opt},{rep.mean_accuracy:.17g}")
        dropped = by_opt[semisupervised.FEATURE_OPTIONS[0]].dropped_betas
        if dropped:
            print(f"warning: {m}: betas {list(dropped)} skipped (degenerate kernel)", file=sys.stderr)
    (out / "summary.csv").write_text("\n".join(rows) + "\n")
    text = summary_text(reports)
    (out / "summary.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_sbm(args):
    if args.blocks == 1:
        print("warning: blocks=1 gives a single-class graph", file=sys.stderr)
    if args.p_in < args.p_out:
        print("warning: p_in < p_out: inverted community structure", file=sys.stderr)
    g, labels = semisupervised.sbm_generate(args.n, args.blocks, args.p_in, args.p_out, args.seed)
    io.write_edge_list(args.out_graph, g)
    io.write_labels(args.out_labels, g.node_ids, labels + 1)
    print(f"nodes: {g.n}, directed edges: {g.n_edges}")
    return EXIT_OK


# --- parser ---------------------------------------------------------------

def build_parser():
    parser = _Parser(prog="bagofpaths", description="Bag-of-paths quantities on weighted graphs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a graph and report rho(W)")
    _add_weight_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("kernel", help="write a kernel or distance matrix")
    _add_weight_args(p)
    p.add_argument("--method", required=True, type=str.lower, choices=measures.METHODS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("betweenness", help="write a betweenness vector")
    _add_weight_args(p)
    p.add_argument("--measure", required=True, choices=tuple(_MEASURES))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_betweenness)

    p = sub.add_parser("absorb", help="absorption probabilities of a killed chain")
    p.add_argument("--graph", required=True, help="edge list whose third column is W")
    p.add_argument("--absorbing", required=True, help="comma-separated node ids")
    p.add_argument("--source", required=True, type=int)
    p.set_defaults(func=cmd_absorb)

    p = sub.add_parser("verify", help="check closed forms against path enumeration")
    p.add_argument("--max-n", type=int, default=6)
    p.add_argument("--trials", type=_count, default=20)
    p.add_argument("--seed", type=_count, default=42)
    p.add_argument("--tol", type=_positive, default=1e-8)
    p.add_argument("--fd-samples", type=_count, default=100)
    p.add_argument("--fd-step", type=_positive, default=1e-6)
    p.add_argument("--fd-tol", type=_positive, default=1e-4)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("classify", help="nested cross-validation benchmark")
    p.add_argument("--graph", required=True)
    p.add_argument("--labels", required=True, help="TSV: node_id class_id")
    p.add_argument("--methods", default="all", help="comma-separated methods or 'all'")
    p.add_argument("--beta-grid", help="comma-separated betas (default: 1e-6 ... 10)")
    p.add_argument("--rate", type=_probability, default=0.2)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=_count, default=0)
    p.add_argument("--threads", type=_count, default=1, help="worker threads (0 = all cores)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sbm", help="generate a stochastic block model graph")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--p-in", type=_probability, default=0.1)
    p.add_argument("--p-out", type=_probability, default=0.01)
    p.add_argument("--seed", type=_count, default=1)
    p.add_argument("--out-graph", required=True)
    p.add_argument("--out-labels", required=True)
    p.set_defaults(func=cmd_sbm)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BagOfPathsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
