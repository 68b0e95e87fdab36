"""Hierarchical clustering from vertex links.

Agglomerative clustering of spatial samples in which two clusters may only
merge when they are adjacent on a geometry graph, so every cluster stays
contiguous.  Includes Delaunay adjacency for point data, two procedures for
choosing the number of clusters (SMI and GEDM-based consensus clustering),
and a synthetic data generator.
"""

__version__ = "0.1.0"

from .core import MergeTree, cut_by_count, hcv, hcv_fit
from .errors import DomainError, FormatError, HCVError
from .geometry import (
    AdjacencyMatrix,
    PointSet,
    connected_components,
    delaunay_adjacency,
    hop_distances,
)
from .metrics import LinkageSpec, MetricSpec, feature_dissimilarity, lw_update
from .selection import (
    classical_mds,
    gedm,
    get_cluster,
    pac,
    select_k_m3c,
    select_k_smi,
    smi,
)
from .synth import SynthParams, adjusted_rand_index, synthetic_data

__all__ = [
    "AdjacencyMatrix",
    "DomainError",
    "FormatError",
    "HCVError",
    "LinkageSpec",
    "MergeTree",
    "MetricSpec",
    "PointSet",
    "SynthParams",
    "adjusted_rand_index",
    "classical_mds",
    "connected_components",
    "cut_by_count",
    "delaunay_adjacency",
    "feature_dissimilarity",
    "gedm",
    "get_cluster",
    "hcv",
    "hcv_fit",
    "hop_distances",
    "lw_update",
    "pac",
    "select_k_m3c",
    "select_k_smi",
    "smi",
    "synthetic_data",
]
