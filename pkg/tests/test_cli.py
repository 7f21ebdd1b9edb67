import math

import numpy as np
import pytest

from bagofpaths import build_weight_matrix, compute, fundamental_matrix, io, load_graph
from bagofpaths.cli import main


@pytest.fixture
def g2_file(tmp_path):
    # P_ref swaps the two nodes; costs chosen so W = [[0, 0.5], [0.4, 0]] at beta = 1
    p = tmp_path / "g2.tsv"
    p.write_text(f"1 2 1 {math.log(2)!r}\n2 1 1 {math.log(2.5)!r}\n")
    return p


@pytest.fixture
def sbm_files(tmp_path):
    g, lab = tmp_path / "sbm.tsv", tmp_path / "sbm_labels.tsv"
    assert main(["sbm", "--n", "40", "--p-in", "0.3", "--p-out", "0.02", "--seed", "3",
                 "--out-graph", str(g), "--out-labels", str(lab)]) == 0
    return g, lab


def test_validate(g2_file, capsys):
    assert main(["validate", "--graph", str(g2_file), "--beta", "1"]) == 0
    out = capsys.readouterr().out
    assert "spectral radius: 0.4472135955" in out and "nodes: 2" in out


def test_validate_rejects_tiny_beta(tmp_path, capsys):
    p = tmp_path / "dense.tsv"
    p.write_text("".join(f"{i} {j} 3\n" for i in range(1, 6) for j in range(1, 6) if i != j))
    assert main(["validate", "--graph", str(p), "--beta", "1e-9"]) == 1
    assert "spectral radius" in capsys.readouterr().err


def test_missing_file_is_io_error(tmp_path, capsys):
    assert main(["validate", "--graph", str(tmp_path / "nope.tsv"), "--beta", "1"]) == 2
    assert "No such file" in capsys.readouterr().err


def test_usage_errors(g2_file):
    with pytest.raises(SystemExit) as exc:
        main(["validate", "--graph", str(g2_file), "--beta", "1", "--bogus"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["validate", "--graph", str(g2_file), "--beta", "-1"])
    assert exc.value.code == 1
    assert main(["validate", "--graph", str(g2_file)]) == 1  # beta missing


def test_bad_graph_is_domain_error(tmp_path, capsys):
    p = tmp_path / "bad.tsv"
    p.write_text("1 2 0.0\n")
    assert main(["validate", "--graph", str(p), "--beta", "1"]) == 1
    assert "line 1" in capsys.readouterr().err


@pytest.mark.parametrize("method", ["cov", "corh", "ncorh", "bopdist"])
def test_kernel_round_trip(sbm_files, tmp_path, method):
    out = tmp_path / f"{method}.csv"
    assert main(["kernel", "--graph", str(sbm_files[0]), "--beta", "0.5",
                 "--method", method.upper(), "--out", str(out)]) == 0
    K, ids = io.read_matrix_csv(out)
    assert ids == tuple(range(1, 41))
    first = out.read_text().splitlines()[0]
    assert first.startswith("#nodes: 1,2,3")
    g = load_graph(sbm_files[0])
    expect = compute(fundamental_matrix(build_weight_matrix(g, 0.5)), method).K
    np.testing.assert_array_equal(K, expect)  # 17 digits: bit-exact
    if method in ("corh", "ncorh"):
        np.testing.assert_allclose(np.diag(K), 1.0, atol=1e-10)
    if method == "bopdist":
        assert np.all(np.diag(K) == 0) and np.array_equal(K, K.T)


def test_kernel_degenerate_variance_names_node(tmp_path, capsys):
    p = tmp_path / "loop.tsv"
    p.write_text("7 7 0.5\n")
    assert main(["kernel", "--graph", str(p), "--weights-direct", "--method", "cor",
                 "--out", str(tmp_path / "k.csv")]) == 1
    assert "node 7" in capsys.readouterr().err


def test_betweenness_g2(g2_file, tmp_path):
    out = tmp_path / "b.tsv"
    assert main(["betweenness", "--graph", str(g2_file), "--beta", "1",
                 "--measure", "presence", "--out", str(out)]) == 0
    rows = [line.split("\t") for line in out.read_text().splitlines()]
    assert rows[0][0] == "1"
    assert float(rows[0][1]) == pytest.approx(0.7241379310344828, abs=1e-12)


def test_occurrence_at_least_presence(sbm_files, tmp_path):
    vals = {}
    for m in ("presence", "occurrence", "presence-hitting", "occurrence-hitting"):
        out = tmp_path / f"{m}.tsv"
        assert main(["betweenness", "--graph", str(sbm_files[0]), "--beta", "1",
                     "--measure", m, "--out", str(out)]) == 0
        vals[m] = np.loadtxt(out)[:, 1]
    assert np.all(vals["occurrence"] >= vals["presence"] - 1e-12)
    assert np.all(vals["occurrence-hitting"] >= vals["presence-hitting"] - 1e-12)


def test_star_center_is_most_central(tmp_path):
    p = tmp_path / "star.tsv"
    p.write_text("".join(f"1 {k} 1\n{k} 1 1\n" for k in range(2, 6)))
    out = tmp_path / "b.tsv"
    for m in ("presence", "presence-hitting", "occurrence", "occurrence-hitting"):
        assert main(["betweenness", "--graph", str(p), "--beta", "1", "--measure", m, "--out", str(out)]) == 0
        v = np.loadtxt(out)[:, 1]
        assert np.all(v[0] > v[1:])


def test_absorb(tmp_path, capsys):
    p = tmp_path / "chain.tsv"
    p.write_text("1 2 0.5\n1 3 0.5\n")
    assert main(["absorb", "--graph", str(p), "--absorbing", "2,3", "--source", "1"]) == 0
    lines = capsys.readouterr().out.split()
    assert lines == ["2", "0.5", "3", "0.5"]


def test_verify_passes(capsys):
    assert main(["verify", "--max-n", "4", "--trials", "2", "--seed", "1", "--fd-samples", "10"]) == 0
    assert "all checks passed" in capsys.readouterr().out


def test_verify_fault_injection(capsys):
    assert main(["verify", "--max-n", "4", "--trials", "1", "--inject-fault", "--fd-samples", "5"]) == 1
    assert "first failure: paths" in capsys.readouterr().out


def test_verify_no_trials(capsys):
    assert main(["verify", "--trials", "0"]) == 0
    assert "warning" in capsys.readouterr().err


def test_sbm_files(sbm_files):
    g = load_graph(sbm_files[0])
    labels = io.read_labels(sbm_files[1])
    assert g.n == 40 and sorted(labels) == list(range(1, 41))
    assert sorted(set(labels.values())) == [1, 2]


def test_sbm_warnings(tmp_path, capsys):
    args = ["--out-graph", str(tmp_path / "g"), "--out-labels", str(tmp_path / "l")]
    assert main(["sbm", "--n", "20", "--blocks", "1", "--p-in", "0.5"] + args) == 0
    assert "single-class" in capsys.readouterr().err
    assert main(["sbm", "--n", "20", "--p-in", "0.2", "--p-out", "0.5"] + args) == 0
    assert "inverted community" in capsys.readouterr().err
    assert main(["sbm", "--n", "20", "--p-in", "0.5", "--p-out", "0"] + args) == 1


def _classify(files, out, threads):
    return main(["classify", "--graph", str(files[0]), "--labels", str(files[1]),
                 "--methods", "cov,NCorH,bopdist", "--reps", "1", "--beta-grid", "0.1,1",
                 "--seed", "4", "--threads", str(threads), "--out", str(out)])


def test_classify_is_deterministic(sbm_files, tmp_path):
    assert _classify(sbm_files, tmp_path / "a", 1) == 0
    assert _classify(sbm_files, tmp_path / "b", 3) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "summary.csv" in names and "ncorh_unit-norm.csv" in names and len(names) == 8
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    summary = (tmp_path / "a" / "summary.txt").read_text()
    assert "NCorH" in summary and "unit-norm" in summary


def test_classify_label_mismatch(sbm_files, tmp_path, capsys):
    bad = tmp_path / "bad_labels.tsv"
    bad.write_text("1 1\n2 2\n")
    assert main(["classify", "--graph", str(sbm_files[0]), "--labels", str(bad),
                 "--out", str(tmp_path / "o")]) == 1
    assert "labels do not match" in capsys.readouterr().err


def test_classify_unknown_method(sbm_files, tmp_path):
    assert main(["classify", "--graph", str(sbm_files[0]), "--labels", str(sbm_files[1]),
                 "--methods", "katz", "--out", str(tmp_path / "o")]) == 1
