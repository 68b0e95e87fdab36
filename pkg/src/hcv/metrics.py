"""Feature-domain dissimilarities and the Lance-Williams linkage update."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import ConstantRow, FormatError, NonFiniteInput

__all__ = [
    "LINKAGES",
    "METRICS",
    "SQUARED_LINKAGES",
    "LinkageSpec",
    "MetricSpec",
    "lw_coefficients",
    "lw_update",
    "feature_dissimilarity",
    "check_dissimilarity",
]

LINKAGES = ("ward", "single", "complete", "average", "weight", "median", "centroid")
METRICS = ("euclidean", "correlation", "abscor", "maximum", "manhattan",
           "canberra", "binary", "minkowski")

# Linkages whose update rule is geometric in squared Euclidean distance.
SQUARED_LINKAGES = frozenset({"ward", "centroid", "median"})


class LWCoefficients(NamedTuple):
    alpha_i: float
    alpha_j: float
    beta: float
    gamma: float


@dataclass(frozen=True)
class LinkageSpec:
    name: str = "ward"

    def __post_init__(self):
        if self.name not in LINKAGES:
            raise ValueError(f"unknown linkage {self.name!r}; choose from {', '.join(LINKAGES)}")

    def coefficients(self, n_i, n_j, n_h) -> LWCoefficients:
        return lw_coefficients(self.name, n_i, n_j, n_h)


@dataclass(frozen=True)
class MetricSpec:
    name: str = "euclidean"
    minkowski_power: float | None = None

    def __post_init__(self):
        if self.name not in METRICS:
            raise ValueError(f"unknown metric {self.name!r}; choose from {', '.join(METRICS)}")
        if self.name == "minkowski":
            if self.minkowski_power is None or not self.minkowski_power > 0:
                raise ValueError("minkowski metric needs a positive minkowski_power")
        elif self.minkowski_power is not None:
            raise ValueError("minkowski_power is only meaningful for the minkowski metric")


def _linkage_name(linkage) -> str:
    return linkage.name if isinstance(linkage, LinkageSpec) else LinkageSpec(linkage).name


def lw_coefficients(linkage, n_i, n_j, n_h) -> LWCoefficients:
    """Lance-Williams coefficients for merging clusters i and j, seen from h."""
    name = _linkage_name(linkage)
    if name == "single":
        return LWCoefficients(0.5, 0.5, 0.0, -0.5)
    if name == "complete":
        return LWCoefficients(0.5, 0.5, 0.0, 0.5)
    if name == "weight":
        return LWCoefficients(0.5, 0.5, 0.0, 0.0)
    if name == "median":
        return LWCoefficients(0.5, 0.5, -0.25, 0.0)
    s = n_i + n_j
    if name == "average":
        return LWCoefficients(n_i / s, n_j / s, 0.0, 0.0)
    if name == "centroid":
        return LWCoefficients(n_i / s, n_j / s, -n_i * n_j / s**2, 0.0)
    t = n_i + n_j + n_h
    return LWCoefficients((n_i + n_h) / t, (n_j + n_h) / t, -n_h / t, 0.0)


def lw_update(d_hi, d_hj, d_ij, sizes, linkage="ward"):
    """Dissimilarity from cluster h to the union of clusters i and j.

    ``sizes`` is ``(|C_i|, |C_j|, |C_h|)``.  ``d_hi`` and ``d_hj`` may be
    arrays (one entry per cluster h, with ``sizes[2]`` an array too), which is
    how the agglomeration engine updates a whole row at once.
    """
    n_i, n_j, n_h = sizes
    name = _linkage_name(linkage)
    # exact forms of the +-1/2 |d_hi - d_hj| rules; the linear combination rounds
    if name == "single":
        return np.minimum(d_hi, d_hj)
    if name == "complete":
        return np.maximum(d_hi, d_hj)
    ai, aj, b, g = lw_coefficients(name, n_i, n_j, n_h)
    out = ai * d_hi + aj * d_hj + b * d_ij
    if g:
        out = out + g * np.abs(d_hi - d_hj)
    return out


def _pearson_rows(x: np.ndarray) -> np.ndarray:
    centered = x - x.mean(axis=1, keepdims=True)
    norms = np.sqrt((centered**2).sum(axis=1))
    if np.any(norms == 0):
        bad = int(np.flatnonzero(norms == 0)[0])
        raise ConstantRow(f"row {bad} is constant; correlation is undefined")
    z = centered / norms[:, None]
    return np.clip(z @ z.T, -1.0, 1.0)


def feature_dissimilarity(features, metric="euclidean", minkowski_power=None) -> np.ndarray:
    """Pairwise dissimilarities between the rows of an n x p feature matrix.

    Parameters
    ----------
    features : array_like, shape (n, p)
    metric : str or MetricSpec
        One of ``METRICS``.  ``maximum`` is the Chebyshev distance,
        ``abscor`` is ``1 - |r|`` and ``binary`` is the Jaccard distance on the
        nonzero pattern.
    minkowski_power : float, optional
        Exponent of the Minkowski distance.

    Returns
    -------
    ndarray, shape (n, n)
        Symmetric, zero diagonal.
    """
    if isinstance(metric, MetricSpec):
        spec = metric
    else:
        spec = MetricSpec(metric, minkowski_power)
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 1:
        raise FormatError(f"features must be an n x p array with n >= 2, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("features contain NaN or infinite values")

    name = spec.name
    if name in ("correlation", "abscor"):
        if x.shape[1] < 2:
            raise ConstantRow("correlation needs at least two attributes")
        r = _pearson_rows(x)
        d = 1.0 - (np.abs(r) if name == "abscor" else r)
    elif name == "binary":
        d = squareform(pdist(x != 0, "jaccard"))
    elif name == "minkowski":
        d = squareform(pdist(x, "minkowski", p=spec.minkowski_power))
    else:
        scipy_name = {"euclidean": "euclidean", "maximum": "chebyshev",
                      "manhattan": "cityblock", "canberra": "canberra"}[name]
        d = squareform(pdist(x, scipy_name))
    d = np.maximum((d + d.T) / 2.0, 0.0)
    np.fill_diagonal(d, 0.0)
    return d


def check_dissimilarity(d) -> np.ndarray:
    """Validate a precomputed dissimilarity matrix and return it as floats."""
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise FormatError(f"dissimilarity must be square, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        raise NonFiniteInput("dissimilarity contains NaN or infinite values")
    if np.any(d < 0):
        raise FormatError("dissimilarity entries must be nonnegative")
    if not np.allclose(d, d.T, rtol=1e-12, atol=0):
        raise FormatError("dissimilarity matrix is not symmetric")
    if np.any(np.diag(d) != 0):
        raise FormatError("dissimilarity matrix must have a zero diagonal")
    return d
