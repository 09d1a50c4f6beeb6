import json

import numpy as np
import pytest
from click.testing import CliRunner

from nbfeat.cli import cli, main
from nbfeat.digraph import Digraph, write_edge_list
from nbfeat.pipeline import BinaryDynamicsSet, Trial, read_features, write_spikes
from nbfeat.simdyn import erdos_renyi


def invoke(*args):
    res = CliRunner().invoke(cli, [str(a) for a in args], catch_exceptions=False)
    assert res.exit_code == 0, res.output
    return res


@pytest.fixture
def files(tmp_path):
    rng = np.random.default_rng(0)
    g = erdos_renyi(40, 0.1, 1)
    write_edge_list(g, tmp_path / "g.txt")
    trials = [Trial(i % 2, rng.integers(0, 40, 30), rng.uniform(0, 70, 30), i) for i in range(20)]
    write_spikes(BinaryDynamicsSet(trials, 40), tmp_path / "s.csv")
    return tmp_path, tmp_path / "g.txt", tmp_path / "s.csv"


def read_table(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [[float(x) for x in line.split(",")] for line in lines[1:]]


def test_help_lists_registry():
    out = invoke("--help").output
    assert "tcc" in out and "blsr" in out
    for sub in ("params", "select", "featurize", "simulate", "classify", "experiment", "cover",
                "validate"):
        assert sub in out


def test_params_edgeless(tmp_path):
    write_edge_list(Digraph(5), tmp_path / "g.txt")
    invoke("params", "compute", tmp_path / "g.txt", "-c", "size", "-o", tmp_path / "t.csv")
    header, rows = read_table(tmp_path / "t.csv")
    assert header == ["vertex", "size"] and [r[1] for r in rows] == [1.0] * 5
    assert (tmp_path / "t.csv.meta.json").exists()


def test_params_three_cycle(tmp_path):
    write_edge_list(Digraph(3, [(0, 1), (1, 2), (2, 0)]), tmp_path / "g.txt")
    invoke("params", "compute", tmp_path / "g.txt", "-c", "ec,size", "-o", tmp_path / "t.csv")
    _, rows = read_table(tmp_path / "t.csv")
    assert rows[0] == [0, 0, 3]


def test_params_unknown_code(tmp_path):
    write_edge_list(Digraph(3), tmp_path / "g.txt")
    res = CliRunner().invoke(cli, ["params", "compute", str(tmp_path / "g.txt"), "-c", "xyz",
                                   "-o", str(tmp_path / "t.csv")])
    assert res.exit_code != 0 and "xyz" in res.output


def test_params_shards_and_resume(files):
    d, g, _ = files
    invoke("params", "compute", g, "-c", "tcc,nbc", "-o", d / "full.csv")
    invoke("params", "compute", g, "-c", "tcc,nbc", "-o", d / "part.csv", "--vertices", "0:15")
    # simulate an interrupted run: keep a torn last line
    text = (d / "part.csv").read_text()
    (d / "part.csv").write_text(text[:-5])
    invoke("params", "compute", g, "-c", "tcc,nbc", "-o", d / "part.csv", "--resume")
    assert (d / "part.csv").read_text() == (d / "full.csv").read_text()


def test_select_and_cover(files):
    d, g, _ = files
    invoke("select", g, "-p", "size", "-m", "5", "-o", d / "sel.csv")
    lines = (d / "sel.csv").read_text().splitlines()
    assert lines[0] == "rank,vertex,size" and len(lines) == 6
    res = invoke("cover", g, "-p", "size", "--fraction", "0.9", "-o", d / "cover.json")
    assert int(res.output.strip()) == json.loads((d / "cover.json").read_text())["centres"]


def test_featurize_width_and_determinism(files):
    d, g, s = files
    invoke("featurize", g, s, "-p", "tcc", "-q", "size", "-m", "10", "-o", d / "a.csv")
    invoke("featurize", g, s, "-p", "tcc", "-q", "size", "-m", "10", "-o", d / "b.csv")
    x, y = read_features(d / "a.csv")
    assert x.shape == (20, 20)
    assert (d / "a.csv").read_bytes() == (d / "b.csv").read_bytes()


def test_featurize_silent(files):
    d, g, _ = files
    write_spikes(BinaryDynamicsSet([Trial(0, [], [], 0), Trial(1, [], [], 1)]), d / "quiet.csv")
    invoke("featurize", g, d / "quiet.csv", "-p", "size", "-m", "40", "-o", d / "f.csv")
    x, _ = read_features(d / "f.csv")
    assert x.shape == (2, 80) and not x.any()


def test_featurize_empty_spikes(files):
    d, g, _ = files
    (d / "none.csv").write_text("trial,label,vertex,time_ms\n")
    assert main(["featurize", str(g), str(d / "none.csv"), "-p", "size", "-m", "3",
                 "-o", str(d / "f.csv")]) != 0


def test_seed_is_mandatory(files):
    d, g, s = files
    res = CliRunner().invoke(cli, ["validate", str(g), str(s), "--mode", "random_selection",
                                   "-p", "size", "-o", str(d / "v.csv")])
    assert res.exit_code != 0 and "--seed" in res.output


def test_identity_sigma_matches_featurize(files):
    d, g, s = files
    np.savetxt(d / "id.txt", np.arange(40), fmt="%d")
    invoke("featurize", g, s, "-p", "nbc", "-q", "tcc", "-m", "6", "-o", d / "base.csv")
    invoke("validate", g, s, "--mode", "shuffled_activity", "--sigma", d / "id.txt", "-p", "nbc",
           "-q", "tcc", "-m", "6", "--seed", "0", "-o", d / "shuf.csv")
    assert (d / "base.csv").read_bytes() == (d / "shuf.csv").read_bytes()


def test_random_selection_writes_twenty(files):
    d, g, s = files
    invoke("validate", g, s, "--mode", "random_selection", "-p", "size", "-m", "4",
           "--seed", "2", "-o", d / "r.csv")
    assert len(list(d.glob("r_*.csv"))) == 20


def test_simulate_classify_experiment(tmp_path):
    invoke("simulate", "-n", "120", "-p", "0.05", "--classes", "3", "--repeats", "10",
           "--receptors", "20", "--seed", "4", "-o", tmp_path / "sim")
    assert {p.name for p in (tmp_path / "sim").iterdir()} >= {"graph.txt", "spikes.csv",
                                                              "protocol.json"}
    invoke("featurize", tmp_path / "sim/graph.txt", tmp_path / "sim/spikes.csv", "-p", "size",
           "-m", "10", "--bins", "10:200:2", "-o", tmp_path / "f.csv")
    invoke("classify", tmp_path / "f.csv", "--seed", "1", "--baseline", "-o", tmp_path / "r.json")
    report = json.loads((tmp_path / "r.json").read_text())
    assert 0 <= report["accuracy"] <= 1 and len(report["cv"]["folds"]) == 5
    assert "nearest_centroid" in report
    invoke("experiment", "--graph", tmp_path / "sim/graph.txt", "--spikes",
           tmp_path / "sim/spikes.csv", "-p", "size,tcc", "-q", "size", "-m", "10",
           "--end", "both", "--seed", "1", "-o", tmp_path / "exp")
    grid = json.loads((tmp_path / "exp/report.json").read_text())["grid"]
    assert len(grid) == 4
    assert all({"accuracy", "cv_min", "cv_max"} <= set(r) for r in grid)


def test_main_exit_codes(tmp_path):
    assert main(["params", "list"]) == 0
    (tmp_path / "bad.txt").write_text("0 0\n")
    assert main(["params", "compute", str(tmp_path / "bad.txt"), "-c", "size",
                 "-o", str(tmp_path / "o.csv")]) == 2
