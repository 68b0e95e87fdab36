"""Agglomerative clustering restricted to vertex-linked clusters.

Two clusters may merge only while some member of one is adjacent to some
member of the other on the geometry graph.  The merged cluster inherits the
union of both adjacency rows, so the constraint is maintained by a simple
elementwise OR.  Because admissible pairs are a subset of all pairs, merge
heights can decrease along the sequence (inversions); the tree records them
as they occur.

Node references follow the usual hierarchical-clustering encoding: ``-i``
for leaf ``i`` (1-based) and ``t`` for merge step ``t`` (1-based).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, IdMismatch, KOutOfRange
from .geometry import AdjacencyMatrix, PointSet, connected_components, delaunay_adjacency
from .metrics import (
    SQUARED_LINKAGES,
    LinkageSpec,
    MetricSpec,
    check_dissimilarity,
    feature_dissimilarity,
    lw_update,
)

__all__ = ["MergeTree", "hcv_fit", "hcv", "cut_by_count", "merge_members"]


@dataclass(frozen=True)
class MergeTree:
    """Merge history of a (possibly disconnected) constrained agglomeration.

    ``merges[t - 1] == (left, right)`` are node references and
    ``heights[t - 1]`` the dissimilarity at which step ``t`` happened.
    """

    labels: tuple
    merges: tuple
    heights: np.ndarray
    n_components: int
    linkage: str = "ward"
    metric: str | None = None
    squared: bool = False
    info: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def n_merges(self) -> int:
        return len(self.merges)

    def inversions(self) -> list[int]:
        """Merge steps (1-based) recorded lower than the preceding step."""
        h = self.heights
        return [t + 1 for t in range(1, len(h)) if h[t] < h[t - 1]]


def _leaf(i: int) -> int:
    return -(i + 1)


def hcv_fit(adjacency, dissimilarity, linkage="ward", ids=None, tie_rtol=1e-12) -> MergeTree:
    """Constrained agglomerative clustering on precomputed inputs.

    Parameters
    ----------
    adjacency : AdjacencyMatrix or array_like, shape (n, n)
    dissimilarity : array_like, shape (n, n)
        Used as given; no squaring happens here.
    linkage : str or LinkageSpec
    ids : sequence, optional
        Sample ids; checked against ``adjacency.ids`` when both are given.
    tie_rtol : float
        Candidates within this relative distance of the minimum count as tied,
        so that rounding in the linkage update cannot decide a tie.

    Returns
    -------
    MergeTree
        ``n - c`` merges where ``c`` is the number of connected components.

    Notes
    -----
    Among tied admissible pairs the lexicographically smallest ``(i, j)``
    wins, where a cluster's index is its smallest leaf index.
    """
    spec = linkage if isinstance(linkage, LinkageSpec) else LinkageSpec(linkage)
    if not isinstance(adjacency, AdjacencyMatrix):
        adjacency = AdjacencyMatrix(np.asarray(adjacency), ids)
    elif ids is not None and tuple(ids) != adjacency.ids:
        raise IdMismatch("sample ids of the dissimilarity and adjacency inputs differ")
    d = check_dissimilarity(dissimilarity).copy()
    n = adjacency.n
    if d.shape[0] != n:
        raise DimensionMismatch(f"adjacency is {n}x{n} but dissimilarity is {d.shape[0]}x{d.shape[0]}")
    if n < 2:
        raise DimensionMismatch("at least two samples are required")

    a = adjacency.a.astype(bool)
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    active = np.ones(n, dtype=bool)
    size = np.ones(n, dtype=float)
    node = [_leaf(i) for i in range(n)]
    merges, heights = [], []

    while True:
        cand = a & upper
        if not cand.any():
            break
        masked = np.where(cand, d, np.inf)
        vmin = masked.min()
        tied = masked <= vmin + tie_rtol * abs(vmin)
        i, j = divmod(int(np.argmax(tied)), n)
        h_ij = d[i, j]
        merges.append((node[i], node[j]))
        heights.append(float(h_ij))

        active[j] = False
        others = np.flatnonzero(active)
        others = others[others != i]
        new = lw_update(d[others, i], d[others, j], h_ij, (size[i], size[j], size[others]), spec)
        d[i, others] = d[others, i] = new
        a[i] |= a[j]
        a[:, i] |= a[:, j]
        a[i, i] = False
        a[j, :] = False
        a[:, j] = False
        size[i] += size[j]
        node[i] = len(merges)

    n_components = n - len(merges)
    return MergeTree(
        labels=adjacency.ids,
        merges=tuple(merges),
        heights=np.asarray(heights, dtype=float),
        n_components=n_components,
        linkage=spec.name,
    )


def hcv(geometry, features=None, *, dissimilarity=None, linkage="ward",
        metric="euclidean", minkowski_power=None, ids=None) -> MergeTree:
    """Full pipeline: geometry -> adjacency, features -> dissimilarity -> tree.

    ``geometry`` is either an :class:`AdjacencyMatrix` or point coordinates
    (a :class:`PointSet` or ``(n, 2)`` array), which are tessellated.  Give
    either ``features`` or a precomputed ``dissimilarity``.

    With ``metric="euclidean"`` and a ward, centroid or median linkage the
    computed distances are squared before agglomerating, so heights come out
    in squared units.  Precomputed dissimilarities are never transformed.
    """
    if isinstance(geometry, AdjacencyMatrix):
        adjacency = geometry
    else:
        if not isinstance(geometry, PointSet):
            geometry = PointSet(np.asarray(geometry, dtype=float), ids)
        adjacency = delaunay_adjacency(geometry)
    if ids is not None and tuple(ids) != adjacency.ids:
        raise IdMismatch("feature ids do not match geometry ids")

    spec = linkage if isinstance(linkage, LinkageSpec) else LinkageSpec(linkage)
    if (features is None) == (dissimilarity is None):
        raise ValueError("give exactly one of features or dissimilarity")
    squared = False
    if dissimilarity is None:
        mspec = metric if isinstance(metric, MetricSpec) else MetricSpec(metric, minkowski_power)
        x = np.asarray(features, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[0] != adjacency.n:
            raise DimensionMismatch(f"{x.shape[0]} feature rows for {adjacency.n} locations")
        d = feature_dissimilarity(x, mspec)
        if mspec.name == "euclidean" and spec.name in SQUARED_LINKAGES:
            d = d**2
            squared = True
        metric_name = mspec.name
    else:
        d = dissimilarity
        metric_name = "precomputed"

    tree = hcv_fit(adjacency, d, spec)
    return MergeTree(
        labels=tree.labels,
        merges=tree.merges,
        heights=tree.heights,
        n_components=tree.n_components,
        linkage=tree.linkage,
        metric=metric_name,
        squared=squared,
    )


def merge_members(tree: MergeTree) -> list[tuple[list[int], list[int]]]:
    """Leaf indices (0-based) under the left and right child of every merge."""
    members: list[list[int]] = []
    out = []

    def leaves(ref):
        return [-ref - 1] if ref < 0 else members[ref - 1]

    for left, right in tree.merges:
        lm, rm = leaves(left), leaves(right)
        out.append((lm, rm))
        members.append(lm + rm)
    return out


def cut_by_count(tree: MergeTree, k: int) -> np.ndarray:
    """Cluster labels 1..k after undoing the last ``n - k`` merges.

    Labels are numbered in order of each cluster's smallest leaf index.
    Unlike a height cut, this is well defined in the presence of inversions.
    """
    n = tree.n
    if not tree.n_components <= k <= n:
        raise KOutOfRange(f"k must lie in [{tree.n_components}, {n}], got {k}")
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    rep = []
    for left, right in tree.merges[: n - k]:
        li = -left - 1 if left < 0 else rep[left - 1]
        ri = -right - 1 if right < 0 else rep[right - 1]
        a, b = find(li), find(ri)
        parent[max(a, b)] = min(a, b)
        rep.append(min(a, b))

    labels = np.empty(n, dtype=np.int64)
    seen: dict[int, int] = {}
    for i in range(n):
        labels[i] = seen.setdefault(find(i), len(seen) + 1)
    return labels


def components_labels(adjacency) -> np.ndarray:
    """Label vector (1-based) of the connected components of a graph."""
    adj = adjacency if isinstance(adjacency, AdjacencyMatrix) else AdjacencyMatrix(np.asarray(adjacency))
    labels = np.empty(adj.n, dtype=np.int64)
    for c, comp in enumerate(connected_components(adj), start=1):
        labels[comp] = c
    return labels
