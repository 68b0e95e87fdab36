import xml.etree.ElementTree as ET

import numpy as np

from hcv.core import MergeTree
from hcv.plotting import cluster_colors, dendrogram_svg, scatter_svg

NS = "{http://www.w3.org/2000/svg}"


def test_scatter_two_colors(rng):
    xy = rng.random((10, 2))
    svg = ET.fromstring(scatter_svg(xy, [1] * 5 + [2] * 5))
    points = [c for c in svg.iter(f"{NS}circle") if c.get("class") == "point"]
    assert len(points) == 10
    assert len({c.get("fill") for c in points}) == 2


def test_many_colors_distinct():
    assert len(set(cluster_colors(25))) == 25


def test_dendrogram_inversion_annotated():
    tree = MergeTree(("A", "B", "C"), ((-2, -3), (-1, 1)), np.array([4.0, 1.0]), 1)
    root = ET.fromstring(dendrogram_svg(tree, labels=[1, 2, 2]))
    paths = [p for p in root.iter(f"{NS}path") if "merge" in p.get("class", "")]
    assert len(paths) == 2
    inv = [p for p in paths if "inversion" in p.get("class")]
    assert [p.get("data-step") for p in inv] == ["2"]
    texts = [t.text for t in root.iter(f"{NS}text")]
    assert "inversion at step 2" in texts


def test_dendrogram_monotone_has_no_inversions():
    tree = MergeTree(tuple("abcd"), ((-1, -2), (-3, -4), (1, 2)), np.array([1.0, 2.0, 5.0]), 1)
    root = ET.fromstring(dendrogram_svg(tree))
    classes = [p.get("class") for p in root.iter(f"{NS}path")]
    assert classes == ["merge"] * 3
    assert len([c for c in root.iter(f"{NS}circle") if c.get("class") == "leaf"]) == 4


def test_dendrogram_forest():
    tree = MergeTree(tuple("abc"), ((-1, -3),), np.array([1.0]), 2)
    root = ET.fromstring(dendrogram_svg(tree))
    assert len([c for c in root.iter(f"{NS}circle") if c.get("class") == "leaf"]) == 3
