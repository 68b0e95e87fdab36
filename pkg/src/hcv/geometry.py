"""Vertex-link graphs: Delaunay adjacency, connected components, hop counts.

Adjacency is the Delaunay graph of the sample locations, i.e. two samples are
linked when their Voronoi cells share an edge.  The triangulation is built by
a sorted sweep followed by Lawson edge flips, using orientation and in-circle
predicates that fall back to exact rational arithmetic whenever the floating
point result is not certified by a static error bound.

Cocircular configurations admit several Delaunay triangulations.  Every
polygonal cell of the (unique) Delaunay subdivision is therefore
re-triangulated as a fan from its smallest-index vertex, so the output does
not depend on input order or on the flip sequence.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse import csgraph

from .errors import (
    DegenerateConfiguration,
    DimensionUnsupported,
    DisconnectedGraph,
    DuplicatePoints,
    FormatError,
    NonFiniteInput,
)

__all__ = [
    "PointSet",
    "AdjacencyMatrix",
    "delaunay_adjacency",
    "hop_distances",
    "connected_components",
    "orient2d",
    "incircle",
]

_EPS = 2.0**-53
_CCW_ERRBOUND = (3.0 + 16.0 * _EPS) * _EPS
_ICC_ERRBOUND = (10.0 + 96.0 * _EPS) * _EPS


def _default_ids(n):
    return tuple(str(i + 1) for i in range(n))


@dataclass(frozen=True)
class PointSet:
    """Sample locations on the geometry domain."""

    coords: np.ndarray
    ids: tuple = field(default=None)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 2:
            raise FormatError("coordinates must be a 2-D array (n x p2)")
        if not np.all(np.isfinite(coords)):
            raise NonFiniteInput("coordinates contain NaN or infinite values")
        ids = _default_ids(len(coords)) if self.ids is None else tuple(self.ids)
        if len(ids) != len(coords):
            raise FormatError(f"{len(ids)} ids for {len(coords)} coordinate rows")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Binary symmetric contiguity matrix with zero diagonal."""

    a: np.ndarray
    ids: tuple = field(default=None)

    def __post_init__(self):
        a = np.asarray(self.a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise FormatError(f"adjacency must be square, got shape {a.shape}")
        if a.dtype == bool:
            a = a.astype(np.int8)
        if not np.all((a == 0) | (a == 1)):
            raise FormatError("adjacency entries must be 0 or 1")
        a = a.astype(np.int8)
        if not np.array_equal(a, a.T):
            raise FormatError("adjacency matrix is not symmetric")
        if np.any(np.diag(a)):
            raise FormatError("adjacency matrix must have a zero diagonal")
        ids = _default_ids(len(a)) if self.ids is None else tuple(self.ids)
        if len(ids) != len(a):
            raise FormatError(f"{len(ids)} ids for a {len(a)}x{len(a)} adjacency")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.a, 1))
        return list(zip(i.tolist(), j.tolist()))


def _as_adjacency(adjacency) -> AdjacencyMatrix:
    if isinstance(adjacency, AdjacencyMatrix):
        return adjacency
    return AdjacencyMatrix(np.asarray(adjacency))


# ---------------------------------------------------------------------------
# predicates
# ---------------------------------------------------------------------------

def _sign(x) -> int:
    return (x > 0) - (x < 0)


def orient2d(a, b, c) -> int:
    """Sign of the signed area of triangle (a, b, c): +1 if counter-clockwise."""
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    if abs(det) > _CCW_ERRBOUND * (abs(detleft) + abs(detright)):
        return _sign(det)
    ax, ay, bx, by, cx, cy = (Fraction(v) for v in (a[0], a[1], b[0], b[1], c[0], c[1]))
    return _sign((ax - cx) * (by - cy) - (ay - cy) * (bx - cx))


def incircle(a, b, c, d) -> int:
    """+1 if d lies strictly inside the circle through counter-clockwise a, b, c.

    Returns 0 when the four points are cocircular and -1 when d is outside.
    """
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    bdxcdy, cdxbdy = bdx * cdy, cdx * bdy
    cdxady, adxcdy = cdx * ady, adx * cdy
    adxbdy, bdxady = adx * bdy, bdx * ady
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = (alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy)
           + clift * (adxbdy - bdxady))
    permanent = ((abs(bdxcdy) + abs(cdxbdy)) * alift
                 + (abs(cdxady) + abs(adxcdy)) * blift
                 + (abs(adxbdy) + abs(bdxady)) * clift)
    if abs(det) > _ICC_ERRBOUND * permanent:
        return _sign(det)
    fa, fb, fc, fd = ([Fraction(p[0]), Fraction(p[1])] for p in (a, b, c, d))
    adx, ady = fa[0] - fd[0], fa[1] - fd[1]
    bdx, bdy = fb[0] - fd[0], fb[1] - fd[1]
    cdx, cdy = fc[0] - fd[0], fc[1] - fd[1]
    det = ((adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
           + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
           + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady))
    return _sign(det)


# ---------------------------------------------------------------------------
# triangulation
# ---------------------------------------------------------------------------

class _Triangulation:
    """Triangles stored as a map from each ccw directed edge to its apex."""

    def __init__(self, pts):
        self.pts = pts
        self.apex: dict[tuple[int, int], int] = {}

    def add(self, a, b, c):
        self.apex[(a, b)] = c
        self.apex[(b, c)] = a
        self.apex[(c, a)] = b

    def remove(self, a, b, c):
        del self.apex[(a, b)]
        del self.apex[(b, c)]
        del self.apex[(c, a)]

    def interior_edges(self):
        return [(u, v) for (u, v) in self.apex if u < v and (v, u) in self.apex]

    def edges(self):
        return {(min(u, v), max(u, v)) for (u, v) in self.apex}

    def triangles(self):
        return {tuple(sorted((u, v, w))) for (u, v), w in self.apex.items()}

    def make_delaunay(self):
        pts = self.pts
        stack = self.interior_edges()
        while stack:
            u, v = stack.pop()
            w = self.apex.get((u, v))
            x = self.apex.get((v, u))
            if w is None or x is None:
                continue
            if incircle(pts[u], pts[v], pts[w], pts[x]) <= 0:
                continue
            self.remove(u, v, w)
            self.remove(v, u, x)
            self.add(u, x, w)
            self.add(x, v, w)
            stack.extend([(u, x), (x, v), (v, w), (w, u)])


def _sweep_triangulation(pts, order) -> _Triangulation:
    tri = _Triangulation(pts)
    p0, p1 = order[0], order[1]
    j = 2
    while j < len(order) and orient2d(pts[p0], pts[p1], pts[order[j]]) == 0:
        j += 1
    if j == len(order):
        raise DegenerateConfiguration("all points are collinear; Delaunay adjacency is undefined")
    chain, apex = order[:j], order[j]
    if orient2d(pts[p0], pts[p1], pts[apex]) > 0:
        for a, b in zip(chain, chain[1:]):
            tri.add(a, b, apex)
        hull = list(chain) + [apex]
    else:
        for a, b in zip(chain, chain[1:]):
            tri.add(b, a, apex)
        hull = list(reversed(chain)) + [apex]

    for q in order[j + 1:]:
        h = len(hull)
        visible = [orient2d(pts[hull[t]], pts[hull[(t + 1) % h]], pts[q]) < 0 for t in range(h)]
        start = next(t for t in range(h) if visible[t] and not visible[t - 1])
        hull = hull[start:] + hull[:start]
        stop = 0
        while visible[(start + stop) % h]:
            a, b = hull[stop], hull[stop + 1] if stop + 1 < h else hull[0]
            tri.add(b, a, q)
            stop += 1
        hull = [hull[0], q] + hull[stop:] if stop < h else [hull[0], q]
    return tri


def _canonical_edges(tri: _Triangulation) -> set[tuple[int, int]]:
    pts = tri.pts
    tris = sorted(tri.triangles())
    index = {t: k for k, t in enumerate(tris)}
    parent = list(range(len(tris)))

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    edges = tri.edges()
    for u, v in tri.interior_edges():
        w, x = tri.apex[(u, v)], tri.apex[(v, u)]
        if incircle(pts[u], pts[v], pts[w], pts[x]) == 0:
            edges.discard((u, v))
            ra = find(index[tuple(sorted((u, v, w)))])
            rb = find(index[tuple(sorted((u, v, x)))])
            parent[max(ra, rb)] = min(ra, rb)

    cells: dict[int, set[int]] = {}
    for k, t in enumerate(tris):
        cells.setdefault(find(k), set()).update(t)
    for verts in cells.values():
        if len(verts) > 3:
            root = min(verts)
            edges.update((root, v) for v in verts if v != root)
    return edges


def delaunay_adjacency(points, ids: Sequence | None = None) -> AdjacencyMatrix:
    """Adjacency of the Delaunay triangulation of a planar point set.

    Parameters
    ----------
    points : PointSet or array_like, shape (n, 2)
    ids : sequence, optional
        Sample identifiers when ``points`` is a plain array.

    Returns
    -------
    AdjacencyMatrix
        ``a[i, j] == 1`` iff samples i and j share a Delaunay edge.

    Raises
    ------
    DimensionUnsupported
        Coordinates are not two-dimensional.
    DuplicatePoints
        Two samples have identical coordinates.
    DegenerateConfiguration
        Three or more points, all collinear.
    """
    if not isinstance(points, PointSet):
        points = PointSet(np.asarray(points, dtype=float), ids)
    if points.dim != 2:
        raise DimensionUnsupported(f"tessellation requires 2-D coordinates, got {points.dim}")
    n = points.n
    if n < 2:
        raise DegenerateConfiguration("at least two points are required")
    pts = [(float(x), float(y)) for x, y in points.coords]
    order = sorted(range(n), key=lambda i: pts[i])
    for i, j in zip(order, order[1:]):
        if pts[i] == pts[j]:
            a, b = sorted((i, j))
            raise DuplicatePoints(
                f"samples {points.ids[a]!r} and {points.ids[b]!r} share coordinates {pts[i]}"
            )

    a = np.zeros((n, n), dtype=np.int8)
    if n == 2:
        a[0, 1] = a[1, 0] = 1
        return AdjacencyMatrix(a, points.ids)

    tri = _sweep_triangulation(pts, order)
    tri.make_delaunay()
    for u, v in _canonical_edges(tri):
        a[u, v] = a[v, u] = 1
    return AdjacencyMatrix(a, points.ids)


# ---------------------------------------------------------------------------
# graph utilities
# ---------------------------------------------------------------------------

def connected_components(adjacency) -> list[list[int]]:
    """Connected components as sorted index lists, ordered by smallest member."""
    adj = _as_adjacency(adjacency)
    _, labels = csgraph.connected_components(csr_matrix(adj.a), directed=False)
    groups: dict[int, list[int]] = {}
    for i, lab in enumerate(labels.tolist()):
        groups.setdefault(lab, []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def hop_distances(adjacency) -> np.ndarray:
    """All-pairs shortest-path edge counts of a connected adjacency graph.

    Raises
    ------
    DisconnectedGraph
        If the graph has more than one component; the exception carries the
        components as lists of sample ids.
    """
    adj = _as_adjacency(adjacency)
    comps = connected_components(adj)
    if len(comps) > 1:
        raise DisconnectedGraph([[adj.ids[i] for i in c] for c in comps])
    hops = csgraph.shortest_path(csr_matrix(adj.a), method="D", unweighted=True, directed=False)
    return hops.astype(np.int64)
