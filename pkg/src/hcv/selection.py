"""Choosing the number of clusters from a fitted merge tree.

Two procedures are available through :func:`get_cluster`:

``smi``
    A mixture of within-cluster squared feature dissimilarity and squared
    graph hop distance, weighted per cluster by a logistic function of the
    cluster's relative geometric spread.  K is chosen where the index drops
    most relative to K - 1.

``m3c``
    The tree is turned into a dissimilarity between samples (first-join
    heights, clamped so inversions cannot raise a pair above a later merge),
    embedded by classical MDS, and the embedding is fed to resampling-based
    consensus clustering.  Stability is measured by the proportion of
    ambiguous clustering (PAC), optionally against Gaussian reference data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import linkage as _scipy_linkage
from scipy.special import expit

from .core import MergeTree, cut_by_count, merge_members
from .errors import DisconnectedGraph, EmptyTree, KOutOfRange, NoPositiveEigenvalue

__all__ = [
    "SmiReport",
    "Embedding",
    "ConsensusReport",
    "smi",
    "smi_terms",
    "select_k_smi",
    "gedm",
    "classical_mds",
    "pac",
    "consensus_matrix",
    "select_k_m3c",
    "get_cluster",
    "rng_stream",
    "RNG_NAME",
]

RNG_NAME = "numpy.PCG64/SeedSequence"

# stream kinds for the counter-based seed split
_OBSERVED, _REFERENCE_DATA, _REFERENCE_RESAMPLE = 0, 1, 2


# ---------------------------------------------------------------------------
# SMI
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmiTerms:
    delta: np.ndarray
    e: np.ndarray
    alpha: np.ndarray
    rho: float
    value: float


def smi_terms(dissimilarity, hops, labels) -> SmiTerms:
    """All per-cluster quantities entering the SMI value (see :func:`smi`)."""
    d2 = np.asarray(dissimilarity, dtype=float) ** 2
    hops = np.asarray(hops)
    if not np.all(np.isfinite(hops)) or np.any(hops < 0):
        raise DisconnectedGraph([], "hop matrix has unreachable pairs; SMI needs a connected graph")
    l2 = hops.astype(float) ** 2
    labels = np.asarray(labels)
    if labels.shape != (d2.shape[0],) or hops.shape != d2.shape:
        raise ValueError("dissimilarity, hops and labels must describe the same samples")

    rho = d2.sum() / l2.sum()
    clusters = [np.flatnonzero(labels == c) for c in np.unique(labels)]
    k = len(clusters)
    delta = np.zeros(k)
    e = np.zeros(k)
    for c, idx in enumerate(clusters):
        m = len(idx)
        if m < 2:
            continue
        pairs = m * m - m
        block = np.ix_(idx, idx)
        delta[c] = d2[block].sum() / pairs
        e[c] = rho * l2[block].sum() / pairs
    total = e.sum()
    alpha = (k * e - total) / total if total > 0 else np.zeros(k)
    w = expit(alpha)
    value = float(np.mean(w * delta + (1.0 - w) * e))
    return SmiTerms(delta, e, alpha, float(rho), value)


def smi(dissimilarity, hops, labels) -> float:
    """Spatial Mixture Index of a partition.

    Parameters
    ----------
    dissimilarity : array_like, shape (n, n)
        Feature dissimilarities in their original (unsquared) scale.
    hops : array_like, shape (n, n)
        Graph hop counts from :func:`hcv.geometry.hop_distances`.
    labels : array_like, shape (n,)
        Cluster label per sample.

    Singleton clusters contribute zero to both the feature and the geometry
    term.  When every cluster is a singleton the index is 0.
    """
    return smi_terms(dissimilarity, hops, labels).value


@dataclass(frozen=True)
class SmiReport:
    k_values: np.ndarray          # 2..kmax
    smi: np.ndarray               # SMI(1)..SMI(kmax)
    ratio: np.ndarray             # SMI(K) / SMI(K - 1) for K in k_values
    k_star: int
    assignment: np.ndarray
    first_candidate: int = 3

    def to_dict(self) -> dict:
        return {
            "method": "smi",
            "k_star": self.k_star,
            "first_candidate": self.first_candidate,
            "table": [
                {"k": 1, "smi": float(self.smi[0]), "ratio": None},
                *({"k": int(k), "smi": float(self.smi[k - 1]), "ratio": float(r)}
                  for k, r in zip(self.k_values, self.ratio)),
            ],
        }


def _check_kmax(tree: MergeTree, kmax: int):
    if not 2 <= kmax <= tree.n:
        raise KOutOfRange(f"kmax must lie in [2, {tree.n}], got {kmax}")


def select_k_smi(tree: MergeTree, dissimilarity, hops, kmax: int = 10,
                 anchor_k1: bool = False) -> SmiReport:
    """Pick K by the smallest ratio SMI(K) / SMI(K - 1).

    SMI is compared over K = 2..kmax, so by default the candidates are
    K = 3..kmax (the ratio at K needs SMI at K - 1 >= 2).  With
    ``anchor_k1=True`` the single-cluster value SMI(1) also anchors a ratio at
    K = 2.  SMI(1) is always reported.  With ``kmax == 2`` the answer is 2.
    Ties go to the smaller K.
    """
    _check_kmax(tree, kmax)
    if tree.n_components > 1:
        raise DisconnectedGraph([], f"merge tree is a forest of {tree.n_components} trees; "
                                    "SMI needs a connected adjacency graph")
    values = np.array([smi(dissimilarity, hops, cut_by_count(tree, k)) for k in range(1, kmax + 1)])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = values[1:] / values[:-1]
    ratio = np.where(np.isnan(ratio), np.inf, ratio)
    k_values = np.arange(2, kmax + 1)
    first = 2 if anchor_k1 or kmax == 2 else 3
    eligible = k_values >= first
    k_star = int(k_values[eligible][int(np.argmin(ratio[eligible]))])
    return SmiReport(k_values, values, ratio, k_star, cut_by_count(tree, k_star), first)


# ---------------------------------------------------------------------------
# GEDM and embedding
# ---------------------------------------------------------------------------

def gedm(tree: MergeTree) -> np.ndarray:
    """Geometry-embedded dissimilarity matrix of a merge tree.

    Off-diagonals start at the height of the last merge; each merge then
    clamps the pairs it joins to ``min(height, current)``.  For a tree with
    nondecreasing heights this is the cophenetic matrix.  Pairs in different
    trees of a forest keep the starting value.
    """
    if tree.n_merges == 0:
        raise EmptyTree("the merge tree has no merges")
    n = tree.n
    g = np.full((n, n), tree.heights[-1], dtype=float)
    np.fill_diagonal(g, 0.0)
    members = merge_members(tree)
    for t in range(tree.n_merges - 1, -1, -1):
        left, right = members[t]
        block = np.ix_(left, right)
        g[block] = np.minimum(tree.heights[t], g[block])
        g[np.ix_(right, left)] = g[block].T
    return g


@dataclass(frozen=True)
class Embedding:
    y: np.ndarray
    eigenvalues: np.ndarray
    n_negative: int = 0
    negative_mass: float = 0.0


def classical_mds(g, tolerance: float = 1e-8) -> Embedding:
    """Classical (Torgerson) scaling of a dissimilarity matrix.

    Eigenvalues of the double-centred matrix below ``tolerance * max`` are
    dropped, including all negative ones; their count and summed magnitude
    are kept on the result.  Each column's sign is fixed so that its
    largest-magnitude entry is positive.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    g2 = g**2
    b = g2 - g2.mean(axis=0, keepdims=True)
    b = b - b.mean(axis=1, keepdims=True)
    b = -0.5 * (b + b.T) / 2.0
    evals, evecs = np.linalg.eigh(b)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    lam_max = evals[0]
    scale = max(float(np.abs(g2).max()), np.finfo(float).tiny)
    if lam_max <= n * np.finfo(float).eps * scale:
        raise NoPositiveEigenvalue("dissimilarity matrix is degenerate (all points coincide)")
    keep = evals > tolerance * lam_max
    vecs = evecs[:, keep]
    pivots = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivots, np.arange(vecs.shape[1])])
    vecs = vecs * signs
    neg = evals[evals < 0]
    return Embedding(
        y=vecs * np.sqrt(evals[keep]),
        eigenvalues=evals[keep],
        n_negative=int(neg.size),
        negative_mass=float(-neg.sum()),
    )


# ---------------------------------------------------------------------------
# consensus clustering
# ---------------------------------------------------------------------------

def pac(consensus, lower: float = 0.1, upper: float = 0.9) -> float:
    """Fraction of off-diagonal consensus entries strictly inside (lower, upper)."""
    if not 0 <= lower < upper <= 1:
        raise ValueError(f"need 0 <= lower < upper <= 1, got ({lower}, {upper})")
    c = np.asarray(consensus, dtype=float)
    iu = np.triu_indices(c.shape[0], 1)
    vals = c[iu]
    if vals.size == 0:
        return 0.0
    return float(np.count_nonzero((vals > lower) & (vals < upper)) / vals.size)


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one cell of the resampling design.

    Streams are addressed by ``(kind, ...)`` counters through
    ``SeedSequence.spawn_key``, so the numbers a cell sees do not depend on
    the order in which cells are evaluated.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _ward_cut(x: np.ndarray, k: int) -> np.ndarray:
    m = x.shape[0]
    z = _scipy_linkage(x, method="ward")
    parent = list(range(2 * m - 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for t in range(m - k):
        a, b = int(z[t, 0]), int(z[t, 1])
        parent[a] = parent[b] = m + t
    roots = [find(i) for i in range(m)]
    relabel: dict[int, int] = {}
    return np.array([relabel.setdefault(r, len(relabel)) for r in roots])


def _resample_counts(y, k, resamples, fraction, seed, key):
    n = y.shape[0]
    m = math.ceil(fraction * n)
    together = np.zeros((n, n), dtype=np.int64)
    sampled = np.zeros((n, n), dtype=np.int64)
    for r in range(resamples):
        rng = rng_stream(seed, *key, k, r)
        idx = np.sort(rng.choice(n, size=m, replace=False))
        labels = _ward_cut(y[idx], k)
        onehot = (labels[:, None] == np.arange(k)[None, :]).astype(np.int64)
        block = np.ix_(idx, idx)
        together[block] += onehot @ onehot.T
        sampled[block] += 1
    return together, sampled


def _consensus_from_counts(together, sampled):
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(sampled > 0, together / np.maximum(sampled, 1), 0.0)
    np.fill_diagonal(c, 1.0)
    return c


def consensus_matrix(y, k, resamples=100, fraction=0.8, seed=0, key=(_OBSERVED,)) -> np.ndarray:
    """Co-clustering frequency over subsampled ward clusterings of ``y``."""
    together, sampled = _resample_counts(np.asarray(y, float), k, resamples, fraction, seed, tuple(key))
    return _consensus_from_counts(together, sampled)


@dataclass(frozen=True)
class ConsensusReport:
    k_values: np.ndarray
    consensus: list
    pac: np.ndarray
    reference_pac: np.ndarray     # shape (mc_references, len(k_values))
    p_value: np.ndarray
    rcsi: np.ndarray
    k_star: int
    assignment: np.ndarray
    seed: int
    criterion: str
    params: dict = field(default_factory=dict)
    embedding_dim: int = 0
    n_negative_eigenvalues: int = 0

    def to_dict(self) -> dict:
        return {
            "method": "m3c",
            "k_star": self.k_star,
            "criterion": self.criterion,
            "seed": self.seed,
            "rng": RNG_NAME,
            "params": dict(self.params),
            "embedding_dim": self.embedding_dim,
            "n_negative_eigenvalues": self.n_negative_eigenvalues,
            "table": [
                {
                    "k": int(k),
                    "pac": float(self.pac[i]),
                    "p_value": float(self.p_value[i]),
                    "rcsi": None if not np.isfinite(self.rcsi[i]) else float(self.rcsi[i]),
                    "reference_pac": [float(v) for v in self.reference_pac[:, i]],
                }
                for i, k in enumerate(self.k_values)
            ],
        }


def _pac_for_ks(y, k_values, resamples, fraction, seed, key, window, n_jobs):
    cells = [(int(k),) for k in k_values]
    if n_jobs == 1:
        counts = [_resample_counts(y, k, resamples, fraction, seed, key) for (k,) in cells]
    else:
        from joblib import Parallel, delayed

        counts = Parallel(n_jobs=n_jobs)(
            delayed(_resample_counts)(y, k, resamples, fraction, seed, key) for (k,) in cells
        )
    mats = [_consensus_from_counts(t, s) for t, s in counts]
    return mats, np.array([pac(c, *window) for c in mats])


def select_k_m3c(tree: MergeTree, kmax: int = 10, resamples: int = 100,
                 subsample_fraction: float = 0.8, mc_references: int = 25,
                 seed: int = 0, criterion: str = "pac", pac_window=(0.1, 0.9),
                 mds_tolerance: float = 1e-8, n_jobs: int = 1) -> ConsensusReport:
    """Monte-Carlo consensus clustering on the MDS embedding of the GEDM.

    Parameters
    ----------
    tree : MergeTree
    kmax : int
        Largest K considered; candidates are ``max(2, n_components)..kmax``.
    resamples : int
        Subsamples per K.
    subsample_fraction : float
        Each subsample holds ``ceil(fraction * n)`` samples.
    mc_references : int
        Gaussian reference datasets with the embedding's covariance.
    seed : int
        Root seed; all randomness is derived from it.
    criterion : {"pac", "rcsi"}
        ``pac`` picks the smallest observed PAC, ``rcsi`` the largest
        ``log(mean reference PAC) - log(observed PAC)``.
    n_jobs : int
        Parallel workers over K; results do not depend on it.
    """
    if criterion not in ("pac", "rcsi"):
        raise ValueError(f"criterion must be 'pac' or 'rcsi', got {criterion!r}")
    _check_kmax(tree, kmax)
    if not 0 < subsample_fraction < 1:
        raise ValueError("subsample_fraction must lie in (0, 1)")
    if resamples < 2:
        raise ValueError("resamples must be at least 2")
    if mc_references < 0 or (criterion == "rcsi" and mc_references < 1):
        raise ValueError("rcsi needs at least one Monte-Carlo reference")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    k_lo = max(2, tree.n_components)
    if kmax > math.ceil(subsample_fraction * tree.n):
        raise KOutOfRange(f"kmax={kmax} exceeds the subsample size {math.ceil(subsample_fraction * tree.n)}")
    if kmax < k_lo:
        raise KOutOfRange(f"kmax={kmax} is below the number of trees in the forest ({tree.n_components})")

    emb = classical_mds(gedm(tree), mds_tolerance)
    y = emb.y
    k_values = np.arange(k_lo, kmax + 1)
    consensus, observed = _pac_for_ks(y, k_values, resamples, subsample_fraction, seed,
                                      (_OBSERVED,), pac_window, n_jobs)

    cov = np.atleast_2d(np.cov(y, rowvar=False))
    cvals, cvecs = np.linalg.eigh(cov)
    factor = cvecs * np.sqrt(np.clip(cvals, 0.0, None))
    reference = np.zeros((mc_references, len(k_values)))
    for b in range(mc_references):
        z = rng_stream(seed, _REFERENCE_DATA, b).standard_normal((y.shape[0], y.shape[1]))
        _, reference[b] = _pac_for_ks(z @ factor.T, k_values, resamples, subsample_fraction,
                                      seed, (_REFERENCE_RESAMPLE, b), pac_window, n_jobs)

    p_value = (1 + (reference <= observed[None, :]).sum(axis=0)) / (1 + mc_references)
    with np.errstate(divide="ignore"):
        if mc_references:
            rcsi = np.log(reference.mean(axis=0)) - np.log(observed)
        else:
            rcsi = np.full(len(k_values), np.nan)
    if criterion == "pac":
        k_star = int(k_values[int(np.argmin(observed))])
    else:
        k_star = int(k_values[int(np.argmax(np.nan_to_num(rcsi, nan=-np.inf)))])

    params = {
        "kmax": kmax,
        "resamples": resamples,
        "subsample_fraction": subsample_fraction,
        "mc_references": mc_references,
        "pac_window": list(pac_window),
        "mds_tolerance": mds_tolerance,
    }
    return ConsensusReport(
        k_values=k_values,
        consensus=consensus,
        pac=observed,
        reference_pac=reference,
        p_value=p_value,
        rcsi=rcsi,
        k_star=k_star,
        assignment=cut_by_count(tree, k_star),
        seed=seed,
        criterion=criterion,
        params=params,
        embedding_dim=y.shape[1],
        n_negative_eigenvalues=emb.n_negative,
    )


def get_cluster(tree: MergeTree, method: str = "smi", kmax: int | None = None, *,
                dissimilarity=None, hops=None, **options):
    """Select the number of clusters and return ``(labels, report)``.

    ``method="smi"`` needs ``dissimilarity`` and ``hops``; ``method="m3c"``
    accepts the keyword options of :func:`select_k_m3c`.
    """
    if kmax is None:
        kmax = min(10, tree.n)
    method = method.lower()
    if method == "smi":
        if dissimilarity is None or hops is None:
            raise ValueError("method 'smi' needs the feature dissimilarity and the hop matrix")
        unknown = set(options) - {"anchor_k1"}
        if unknown:
            raise TypeError(f"unexpected options for smi: {sorted(unknown)}")
        report = select_k_smi(tree, dissimilarity, hops, kmax, **options)
    elif method == "m3c":
        report = select_k_m3c(tree, kmax, **options)
    else:
        raise ValueError(f"unknown method {method!r}; use 'smi' or 'm3c'")
    return report.assignment, report
