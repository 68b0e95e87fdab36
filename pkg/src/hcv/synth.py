"""Synthetic point-level spatial data with planted clusters.

Generation order (all draws come from one PCG64 stream seeded by ``seed``):

1. ``k x p1`` feature centers, uniform on (0, 1).
2. ``k x p2`` geometry centers, uniform on (0, 1).
3. One block of ``n`` rows of uniforms, consumed row by row.  Row ``i`` holds
   the location ``o`` (``p2`` values), one value for the label draw, and
   ``2 * ceil(p1 / 2)`` values turned into Gaussian noise by Box-Muller.

The label of ``o`` is drawn from ``P(label = i) ∝ dist(o, geo_center_i) ** -f``
by inverse CDF.  Gaussians are produced from uniforms in this module rather
than by numpy's ziggurat sampler, so the output only depends on the PCG64 bit
stream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.metrics import adjusted_rand_score

from .errors import LengthMismatch

__all__ = ["SynthParams", "SyntheticDataset", "synthetic_data", "adjusted_rand_index",
           "SYNTH_RNG", "SYNTH_NORMAL"]

SYNTH_RNG = "numpy.PCG64"
SYNTH_NORMAL = "box-muller"


@dataclass(frozen=True)
class SynthParams:
    k: int = 3
    f_exponent: float = 30.0
    r: float = 0.02
    n: int = 300
    p1: int = 2
    p2: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.n < self.k:
            raise ValueError("n must be at least k")
        if self.p1 < 1 or self.p2 < 1:
            raise ValueError("p1 and p2 must be at least 1")
        if self.f_exponent < 0:
            raise ValueError("f_exponent must be nonnegative")
        if not self.r > 0:
            raise ValueError("r must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class SyntheticDataset:
    features: np.ndarray          # n x p1
    points: np.ndarray            # n x p2
    labels: np.ndarray            # 1..k
    feature_centers: np.ndarray   # k x p1
    geometry_centers: np.ndarray  # k x p2
    params: SynthParams

    @property
    def ids(self) -> tuple:
        return tuple(str(i + 1) for i in range(len(self.labels)))

    def metadata(self) -> dict:
        p = self.params
        return {
            "params": {"k": p.k, "f": p.f_exponent, "r": p.r, "n": p.n, "p1": p.p1, "p2": p.p2},
            "seed": p.seed,
            "rng": SYNTH_RNG,
            "normal": SYNTH_NORMAL,
            "feature_centers": self.feature_centers.tolist(),
            "geometry_centers": self.geometry_centers.tolist(),
        }


def _label_probabilities(o: np.ndarray, centers: np.ndarray, f: float) -> np.ndarray:
    dist = np.sqrt(((centers[None, :, :] - o[:, None, :]) ** 2).sum(axis=2))
    zero = dist == 0
    with np.errstate(divide="ignore"):
        logw = -f * np.log(dist)
    logw[zero.any(axis=1)] = -np.inf
    logw[zero] = 0.0
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    return w / w.sum(axis=1, keepdims=True)


def synthetic_data(k=3, f_exponent=30.0, r=0.02, n=300, p1=2, p2=2, seed=0) -> SyntheticDataset:
    """Draw a synthetic dataset; ``k`` may also be a :class:`SynthParams`."""
    params = k if isinstance(k, SynthParams) else SynthParams(k, f_exponent, r, n, p1, p2, seed)
    k, f, r, n, p1, p2 = params.k, params.f_exponent, params.r, params.n, params.p1, params.p2
    rng = np.random.Generator(np.random.PCG64(params.seed))

    feature_centers = rng.random((k, p1))
    geometry_centers = rng.random((k, p2))
    n_pairs = math.ceil(p1 / 2)
    u = rng.random((n, p2 + 1 + 2 * n_pairs))

    o = u[:, :p2]
    prob = _label_probabilities(o, geometry_centers, f)
    cdf = np.cumsum(prob, axis=1)
    labels = np.minimum((u[:, p2:p2 + 1] >= cdf).sum(axis=1), k - 1)

    u1 = u[:, p2 + 1::2]
    u2 = u[:, p2 + 2::2]
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    z = np.empty((n, 2 * n_pairs))
    z[:, 0::2] = radius * np.cos(2.0 * np.pi * u2)
    z[:, 1::2] = radius * np.sin(2.0 * np.pi * u2)
    features = feature_centers[labels] + r * z[:, :p1]

    return SyntheticDataset(
        features=features,
        points=o.copy(),
        labels=labels + 1,
        feature_centers=feature_centers,
        geometry_centers=geometry_centers,
        params=params,
    )


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected agreement of two labelings; 1 iff identical up to relabeling."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"labelings have shapes {a.shape} and {b.shape}")
    return float(adjusted_rand_score(a, b))
