"""Plain-text file formats: matrices, labels, node vectors and edge lists.

Matrix CSV files start with a ``#nodes: id1,id2,...`` header; values are
written with 17 significant digits so a write/read round trip is lossless.
"""
import numpy as np

from .exceptions import GraphFormatError

_HEADER = "#nodes:"


def write_matrix_csv(path, M, node_ids):
    M = np.asarray(M, dtype=float)
    with open(path, "w") as fh:
        fh.write(f"{_HEADER} {','.join(str(i) for i in node_ids)}\n")
        for row in M:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def read_matrix_csv(path):
    """Return ``(M, node_ids)`` from a matrix CSV file."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith(_HEADER):
            raise GraphFormatError(f"expected '{_HEADER} ...' header", 1)
        try:
            ids = tuple(int(t) for t in header[len(_HEADER):].split(","))
        except ValueError:
            raise GraphFormatError("bad node id in header", 1) from None
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                rows.append([float(t) for t in line.split(",")])
            except ValueError:
                raise GraphFormatError("bad number", lineno) from None
    M = np.array(rows, dtype=float)
    if M.shape != (len(ids), len(ids)):
        raise GraphFormatError(f"matrix is {M.shape}, header lists {len(ids)} nodes")
    return M, ids


def read_labels(path):
    """Read a ``node_id class_id`` file into a dict."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            if len(toks) != 2:
                raise GraphFormatError(f"expected 'node_id class_id', got {len(toks)} fields", lineno)
            try:
                node, cls = int(toks[0]), int(toks[1])
            except ValueError:
                raise GraphFormatError("node and class ids must be integers", lineno) from None
            if node in out:
                raise GraphFormatError(f"node {node} labelled twice", lineno)
            out[node] = cls
    return out


def labels_for(node_ids, label_map):
    """Order a label dict by ``node_ids``; the node sets must match exactly."""
    missing = [i for i in node_ids if i not in label_map]
    extra = sorted(set(label_map) - set(node_ids))
    if missing or extra:
        raise GraphFormatError(
            f"labels do not match the graph (missing {missing[:5]}, unknown {extra[:5]})"
        )
    return np.array([label_map[i] for i in node_ids])


def write_labels(path, node_ids, labels):
    with open(path, "w") as fh:
        for i, c in zip(node_ids, labels):
            fh.write(f"{i}\t{int(c)}\n")


def write_vector_tsv(path, node_ids, values):
    with open(path, "w") as fh:
        for i, v in zip(node_ids, values):
            fh.write(f"{i}\t{v:.17g}\n")


def write_edge_list(path, g):
    """Write every directed edge of ``g`` as ``src dst affinity cost``."""
    with open(path, "w") as fh:
        for i, j in zip(*np.nonzero(g.A)):
            fh.write(f"{g.node_ids[i]}\t{g.node_ids[j]}\t{g.A[i, j]:.17g}\t{g.C[i, j]:.17g}\n")
