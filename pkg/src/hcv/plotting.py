"""Static SVG diagnostics: labelled scatter plots and merge-tree dendrograms.

SVG is built with ElementTree so the output is always well-formed XML.
Dendrograms place each merge at its recorded height even when that is below
a child's height; such steps are drawn dashed and labelled as inversions.
"""
from __future__ import annotations

import colorsys
import xml.etree.ElementTree as ET

import numpy as np

from .core import MergeTree

__all__ = ["cluster_colors", "scatter_svg", "dendrogram_svg"]

_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
            "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]

_W, _H, _PAD = 640, 480, 48


def cluster_colors(k: int) -> list[str]:
    if k <= len(_PALETTE):
        return _PALETTE[:k]
    colors = []
    for i in range(k):
        r, g, b = colorsys.hls_to_rgb(i / k, 0.45 + 0.15 * (i % 2), 0.75)
        colors.append(f"#{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}")
    return colors


def _svg_root(title):
    root = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(_W), height=str(_H),
                      viewBox=f"0 0 {_W} {_H}")
    ET.SubElement(root, "rect", width=str(_W), height=str(_H), fill="white")
    t = ET.SubElement(root, "text", x=str(_W / 2), y="24", attrib={"text-anchor": "middle"})
    t.text = title
    return root


def _scale(v, lo, hi, out_lo, out_hi):
    span = hi - lo
    if span == 0:
        return (out_lo + out_hi) / 2 + 0 * v
    return out_lo + (v - lo) / span * (out_hi - out_lo)


def _to_text(root) -> str:
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def scatter_svg(xy, labels, title="clusters", xlabel="x", ylabel="y") -> str:
    """Scatter plot with one fill color per distinct label."""
    xy = np.asarray(xy, dtype=float)
    labels = np.asarray(labels)
    uniq = sorted(set(labels.tolist()))
    color = dict(zip(uniq, cluster_colors(len(uniq))))
    root = _svg_root(title)
    px = _scale(xy[:, 0], xy[:, 0].min(), xy[:, 0].max(), _PAD, _W - _PAD)
    py = _scale(xy[:, 1], xy[:, 1].min(), xy[:, 1].max(), _H - _PAD, _PAD)
    g = ET.SubElement(root, "g", attrib={"class": "points"})
    for x, y, lab in zip(px, py, labels.tolist()):
        ET.SubElement(g, "circle", cx=f"{x:.2f}", cy=f"{y:.2f}", r="4", fill=color[lab],
                      attrib={"class": "point", "data-cluster": str(lab)})
    ET.SubElement(root, "text", x=str(_W / 2), y=str(_H - 10),
                  attrib={"text-anchor": "middle"}).text = xlabel
    ET.SubElement(root, "text", x="14", y=str(_H / 2),
                  attrib={"text-anchor": "middle", "transform": f"rotate(-90 14 {_H / 2})"}).text = ylabel
    legend = ET.SubElement(root, "g", attrib={"class": "legend"})
    for i, lab in enumerate(uniq):
        y = 40 + 16 * i
        ET.SubElement(legend, "rect", x=str(_W - 90), y=str(y - 9), width="10", height="10",
                      stroke=color[lab], fill="none")
        ET.SubElement(legend, "text", x=str(_W - 74), y=str(y)).text = f"cluster {lab}"
    return _to_text(root)


def _leaf_order(tree: MergeTree) -> list[int]:
    children = {t: pair for t, pair in enumerate(tree.merges, start=1)}
    used = {ref for pair in tree.merges for ref in pair}
    roots = [t for t in range(1, tree.n_merges + 1) if t not in used]
    roots += [-(i + 1) for i in range(tree.n) if -(i + 1) not in used]
    order = []

    def first_leaf(ref):
        while ref > 0:
            ref = children[ref][0]
        return -ref - 1

    for root in sorted(roots, key=first_leaf):
        stack = [root]
        while stack:
            ref = stack.pop()
            if ref < 0:
                order.append(-ref - 1)
            else:
                left, right = children[ref]
                stack.extend([right, left])
    return order


def dendrogram_svg(tree: MergeTree, labels=None, title="merge tree") -> str:
    """Dendrogram of a merge tree, one ``<path class="merge ...">`` per step."""
    order = _leaf_order(tree)
    n = tree.n
    xpos = {-(leaf + 1): _PAD + (k + 0.5) * (_W - 2 * _PAD) / n for k, leaf in enumerate(order)}
    ypos = {-(i + 1): 0.0 for i in range(n)}
    heights = tree.heights
    hmax = float(heights.max()) if len(heights) else 1.0
    hmin = min(0.0, float(heights.min())) if len(heights) else 0.0

    def sy(h):
        return float(_scale(h, hmin, hmax if hmax > hmin else hmin + 1.0, _H - _PAD, _PAD + 20))

    root = _svg_root(title)
    g = ET.SubElement(root, "g", attrib={"class": "merges", "fill": "none"})
    inversions = set(tree.inversions())
    for t, ((left, right), h) in enumerate(zip(tree.merges, heights), start=1):
        xl, xr = xpos[left], xpos[right]
        below = h < max(ypos[left], ypos[right])
        cls = "merge inversion" if t in inversions or below else "merge"
        d = (f"M {xl:.2f} {sy(ypos[left]):.2f} V {sy(h):.2f} H {xr:.2f} V {sy(ypos[right]):.2f}")
        attrib = {"class": cls, "data-step": str(t), "data-height": repr(float(h))}
        if "inversion" in cls:
            attrib["stroke-dasharray"] = "4 3"
        ET.SubElement(g, "path", d=d, stroke="#d62728" if "inversion" in cls else "black",
                      attrib=attrib)
        if "inversion" in cls:
            ET.SubElement(root, "text", x=f"{(xl + xr) / 2:.2f}", y=f"{sy(h) - 4:.2f}",
                          attrib={"class": "inversion-label", "text-anchor": "middle",
                                  "font-size": "10", "fill": "#d62728"}).text = f"inversion at step {t}"
        xpos[t] = (xl + xr) / 2
        ypos[t] = float(h)

    leaves = ET.SubElement(root, "g", attrib={"class": "leaves"})
    colors = None
    if labels is not None:
        labels = np.asarray(labels)
        uniq = sorted(set(labels.tolist()))
        colors = dict(zip(uniq, cluster_colors(len(uniq))))
    for leaf in order:
        x = xpos[-(leaf + 1)]
        fill = colors[labels[leaf].item()] if colors else "black"
        ET.SubElement(leaves, "circle", cx=f"{x:.2f}", cy=f"{sy(0.0):.2f}", r="2.5", fill=fill,
                      attrib={"class": "leaf", "data-id": str(tree.labels[leaf])})
    return _to_text(root)
