import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from hcv.cli import main
from hcv.core import hcv
from hcv.geometry import delaunay_adjacency
from hcv.io import read_labels, read_square, read_tree, write_labels, write_square, write_table
from hcv.selection import select_k_m3c


@pytest.fixture
def chain_files(tmp_path):
    write_square(tmp_path / "adj.csv", list("ABC"), [[0, 1, 0], [1, 0, 1], [0, 1, 0]], integer=True)
    write_table(tmp_path / "x.csv", list("ABC"), ["v"], [[0.0], [1.0], [5.0]])
    return tmp_path


@pytest.fixture
def blob_files(tmp_path):
    rng = np.random.default_rng(2)
    gx, gy = np.meshgrid(np.arange(6.0), np.arange(5.0))
    pts = np.column_stack([gx.ravel(), gy.ravel()]) + rng.uniform(-0.1, 0.1, (30, 2))
    x = np.where(pts[:, 0] < 2.5, 0.0, 10.0)[:, None] + rng.normal(0, 0.2, (30, 1))
    ids = [f"s{i}" for i in range(30)]
    write_table(tmp_path / "pts.csv", ids, ["x", "y"], pts)
    write_table(tmp_path / "x.csv", ids, ["v"], x)
    return tmp_path, pts, x


def test_adjacency_three_points(tmp_path):
    write_table(tmp_path / "p.csv", ["a", "b", "c"], ["x", "y"], [[0, 0], [1, 0], [0, 1]])
    assert main(["adjacency", "--points", str(tmp_path / "p.csv"), "--out", str(tmp_path / "a.csv")]) == 0
    ids, a = read_square(tmp_path / "a.csv")
    assert a.tolist() == [[0, 1, 1], [1, 0, 1], [1, 1, 0]]
    assert (tmp_path / "a.csv").read_text().splitlines()[1] == "a,0,1,1"


def test_adjacency_duplicate_exit_2(tmp_path, capsys):
    write_table(tmp_path / "p.csv", ["a", "b", "c"], ["x", "y"], [[0, 0], [1, 0], [1, 0]])
    assert main(["adjacency", "--points", str(tmp_path / "p.csv"), "--out", str(tmp_path / "a.csv")]) == 2
    assert "DuplicatePoints" in capsys.readouterr().err


def test_adjacency_matches_library(tmp_path, rng):
    pts = rng.random((20, 2))
    write_table(tmp_path / "p.csv", [str(i) for i in range(20)], ["x", "y"], pts)
    main(["adjacency", "--points", str(tmp_path / "p.csv"), "--out", str(tmp_path / "a.csv")])
    assert np.array_equal(read_square(tmp_path / "a.csv")[1], delaunay_adjacency(pts).a)


def test_cluster_defaults(chain_files):
    d = chain_files
    out = d / "t.json"
    assert main(["cluster", "--features", str(d / "x.csv"), "--adjacency", str(d / "adj.csv"),
                 "--out", str(out)]) == 0
    obj = json.loads(out.read_text())
    assert obj["linkage"] == "ward" and obj["metric"] == "euclidean" and obj["squared"] is True
    prov = obj["provenance"]
    assert prov["linkage"] == "ward" and "timestamp" in prov and prov["version"]


def test_cluster_chain_single(chain_files):
    d = chain_files
    main(["cluster", "--features", str(d / "x.csv"), "--adjacency", str(d / "adj.csv"),
          "--linkage", "single", "--out", str(d / "t.json")])
    assert json.loads((d / "t.json").read_text())["merges"] == [[-1, -2, 1.0], [1, -3, 4.0]]


def test_cluster_byte_identical_without_timestamp(chain_files):
    d = chain_files
    args = ["cluster", "--features", str(d / "x.csv"), "--adjacency", str(d / "adj.csv"), "--no-timestamp"]
    main(args + ["--out", str(d / "a.json")])
    main(args + ["--out", str(d / "b.json")])
    assert (d / "a.json").read_bytes() == (d / "b.json").read_bytes()


def test_cluster_precomputed(chain_files):
    d = chain_files
    x = np.array([0.0, 1.0, 5.0])
    write_square(d / "d.csv", list("ABC"), np.abs(x[:, None] - x[None]))
    assert main(["cluster", "--dissimilarity", str(d / "d.csv"), "--diss", "precomputed",
                 "--adjacency", str(d / "adj.csv"), "--linkage", "single", "--out", str(d / "t.json")]) == 0
    tree = read_tree(d / "t.json")
    assert tree.metric == "precomputed" and tree.heights.tolist() == [1.0, 4.0]
    assert main(["cluster", "--dissimilarity", str(d / "d.csv"), "--diss", "precomputed",
                 "--metric", "manhattan", "--adjacency", str(d / "adj.csv"),
                 "--out", str(d / "t.json")]) == 64


def test_cluster_reorders_ids(chain_files):
    d = chain_files
    write_table(d / "x2.csv", list("CAB"), ["v"], [[5.0], [0.0], [1.0]])
    main(["cluster", "--features", str(d / "x2.csv"), "--adjacency", str(d / "adj.csv"),
          "--linkage", "single", "--out", str(d / "t.json")])
    assert json.loads((d / "t.json").read_text())["merges"] == [[-1, -2, 1.0], [1, -3, 4.0]]


def test_cluster_id_mismatch_exit_2(chain_files):
    d = chain_files
    write_table(d / "x2.csv", list("ABD"), ["v"], [[5.0], [0.0], [1.0]])
    assert main(["cluster", "--features", str(d / "x2.csv"), "--adjacency", str(d / "adj.csv"),
                 "--out", str(d / "t.json")]) == 2


def test_cluster_parse_failure_exit_3(chain_files):
    d = chain_files
    (d / "bad.csv").write_text("id,v\nA,1\nB,x\nC,2\n")
    assert main(["cluster", "--features", str(d / "bad.csv"), "--adjacency", str(d / "adj.csv"),
                 "--out", str(d / "t.json")]) == 3


def test_cluster_needs_one_geometry(chain_files, capsys):
    d = chain_files
    with pytest.raises(SystemExit) as exc:
        main(["cluster", "--features", str(d / "x.csv"), "--out", str(d / "t.json")])
    assert exc.value.code == 64


def test_select_smi_two_blobs(blob_files):
    d, pts, x = blob_files
    main(["cluster", "--features", str(d / "x.csv"), "--points", str(d / "pts.csv"), "--out", str(d / "t.json")])
    rc = main(["select", "--tree", str(d / "t.json"), "--method", "smi", "--kmax", "6", "--anchor-k1",
               "--features", str(d / "x.csv"), "--points", str(d / "pts.csv"),
               "--out-labels", str(d / "l.csv"), "--out-report", str(d / "r.json")])
    assert rc == 0
    ids, lab = read_labels(d / "l.csv")
    assert len(set(lab.tolist())) == 2
    report = json.loads((d / "r.json").read_text())
    assert report["k_star"] == 2 and report["table"][0]["k"] == 1


def test_select_m3c_deterministic_and_matches_library(blob_files):
    d, pts, x = blob_files
    main(["cluster", "--features", str(d / "x.csv"), "--points", str(d / "pts.csv"), "--out", str(d / "t.json")])
    args = ["select", "--tree", str(d / "t.json"), "--method", "m3c", "--kmax", "4", "--resamples", "8",
            "--mc-refs", "2", "--seed", "5", "--out-labels", str(d / "l.csv")]
    main(args + ["--out-report", str(d / "r1.json")])
    main(args + ["--out-report", str(d / "r2.json"), "--jobs", "2"])
    assert (d / "r1.json").read_bytes() == (d / "r2.json").read_bytes()
    lib = select_k_m3c(read_tree(d / "t.json"), kmax=4, resamples=8, mc_references=2, seed=5)
    body = json.loads((d / "r1.json").read_text())
    assert body["k_star"] == lib.k_star
    assert [row["pac"] for row in body["table"]] == lib.pac.tolist()


def test_select_kmax_one_is_usage_error(blob_files):
    d, *_ = blob_files
    main(["cluster", "--features", str(d / "x.csv"), "--points", str(d / "pts.csv"), "--out", str(d / "t.json")])
    assert main(["select", "--tree", str(d / "t.json"), "--method", "m3c", "--kmax", "1",
                 "--out-labels", str(d / "l.csv"), "--out-report", str(d / "r.json")]) == 64


def test_select_smi_disconnected_exit_2(tmp_path):
    a = np.zeros((4, 4), int)
    a[0, 1] = a[1, 0] = a[2, 3] = a[3, 2] = 1
    ids = list("abcd")
    write_square(tmp_path / "adj.csv", ids, a, integer=True)
    write_table(tmp_path / "x.csv", ids, ["v"], [[0.0], [1.0], [4.0], [6.0]])
    main(["cluster", "--features", str(tmp_path / "x.csv"), "--adjacency", str(tmp_path / "adj.csv"),
          "--out", str(tmp_path / "t.json")])
    assert main(["select", "--tree", str(tmp_path / "t.json"), "--method", "smi", "--kmax", "2",
                 "--features", str(tmp_path / "x.csv"), "--adjacency", str(tmp_path / "adj.csv"),
                 "--out-labels", str(tmp_path / "l.csv"), "--out-report", str(tmp_path / "r.json")]) == 2


def test_synth(tmp_path):
    out = tmp_path / "s"
    assert main(["synth", "--n", "40", "--seed", "3", "--out-dir", str(out)]) == 0
    for name in ("features.csv", "points.csv", "labels.csv", "metadata.json"):
        assert (out / name).exists()
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["seed"] == 3 and meta["rng"] == "numpy.PCG64"
    assert (out / "points.csv").read_text().startswith("id,x,y\n")
    again = tmp_path / "s2"
    main(["synth", "--n", "40", "--seed", "3", "--out-dir", str(again)])
    assert (out / "features.csv").read_bytes() == (again / "features.csv").read_bytes()


def test_plot_scatter_and_dendrogram(blob_files):
    d, pts, x = blob_files
    write_labels(d / "l.csv", [f"s{i}" for i in range(30)], np.where(pts[:, 0] < 2.5, 1, 2))
    assert main(["plot", "--labels", str(d / "l.csv"), "--points", str(d / "pts.csv"), "--out", str(d / "p.svg")]) == 0
    root = ET.parse(d / "p.svg").getroot()
    fills = {c.get("fill") for c in root.iter("{http://www.w3.org/2000/svg}circle") if c.get("class") == "point"}
    assert len(fills) == 2
    main(["cluster", "--features", str(d / "x.csv"), "--points", str(d / "pts.csv"), "--out", str(d / "t.json")])
    assert main(["plot", "--tree", str(d / "t.json"), "--out", str(d / "t.svg")]) == 0
    ET.parse(d / "t.svg")


def test_plot_empty_labels_exit_3(blob_files):
    d, *_ = blob_files
    (d / "l.csv").write_text("")
    assert main(["plot", "--labels", str(d / "l.csv"), "--points", str(d / "pts.csv"), "--out", str(d / "p.svg")]) == 3


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hcv", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("hcv ")


def test_unknown_subcommand_exit_64():
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 64
