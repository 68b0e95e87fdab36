import numpy as np
import pytest
from scipy.stats import chisquare

from hcv.errors import LengthMismatch
from hcv.synth import SynthParams, adjusted_rand_index, synthetic_data

from oracles import ari_contingency


def test_reference_setting_shape():
    ds = synthetic_data(3, 30, 0.02, 300, 2, 2, seed=0)
    assert ds.features.shape == (300, 2) and ds.points.shape == (300, 2)
    assert set(ds.labels.tolist()) <= {1, 2, 3}
    for arr in (ds.points, ds.feature_centers, ds.geometry_centers):
        assert np.all((arr > 0) & (arr < 1))
    assert ds.ids[0] == "1" and len(ds.ids) == 300


def test_seed_determinism():
    a = synthetic_data(4, 10, 0.1, 120, 3, 2, seed=77)
    b = synthetic_data(SynthParams(4, 10, 0.1, 120, 3, 2, 77))
    for name in ("features", "points", "labels", "feature_centers", "geometry_centers"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    c = synthetic_data(4, 10, 0.1, 120, 3, 2, seed=78)
    assert not np.array_equal(a.features, c.features)


def layout_oracle(k, f, r, n, p1, p2, seed):
    """Re-derive a dataset from the documented draw layout with scalar loops."""
    import math

    rng = np.random.Generator(np.random.PCG64(seed))
    fc = rng.random((k, p1))
    gc = rng.random((k, p2))
    pairs = math.ceil(p1 / 2)
    u = rng.random((n, p2 + 1 + 2 * pairs))
    labels, feats = [], []
    for row in u:
        o = row[:p2]
        w = [math.dist(o, c) ** -f for c in gc]
        total, acc, lab = sum(w), 0.0, k - 1
        for i, wi in enumerate(w):
            acc += wi / total
            if row[p2] < acc:
                lab = i
                break
        z = []
        for q in range(pairs):
            u1, u2 = row[p2 + 1 + 2 * q], row[p2 + 2 + 2 * q]
            rad = math.sqrt(-2.0 * math.log(1.0 - u1))
            z += [rad * math.cos(2 * math.pi * u2), rad * math.sin(2 * math.pi * u2)]
        labels.append(lab + 1)
        feats.append([fc[lab][j] + r * z[j] for j in range(p1)])
    return np.array(labels), np.array(feats), u[:, :p2]


def test_draw_layout_against_scalar_oracle():
    ds = synthetic_data(3, 5, 0.1, 200, 3, 2, seed=123)
    labels, feats, pts = layout_oracle(3, 5, 0.1, 200, 3, 2, 123)
    assert np.array_equal(ds.labels, labels)
    assert np.array_equal(ds.points, pts)
    assert np.allclose(ds.features, feats, rtol=1e-13, atol=1e-15)


def test_frozen_values():
    ds = synthetic_data(2, 5, 0.1, 4, 1, 2, seed=123)
    assert ds.labels.tolist() == [2, 2, 1, 2]
    assert ds.features[:, 0].tolist() == pytest.approx(
        [-0.15554368727508794, -0.05882035274477693, 0.6963249829345979, 0.1173782054840998],
        rel=1e-13)


def test_single_cluster():
    assert np.all(synthetic_data(1, 30, 0.1, 50, 2, 2, seed=3).labels == 1)


def test_f_zero_is_uniform():
    ds = synthetic_data(4, 0, 0.1, 100_000, 1, 2, seed=11)
    counts = np.bincount(ds.labels, minlength=5)[1:]
    assert chisquare(counts).pvalue > 1e-3


def test_large_f_nearest_center():
    ds = synthetic_data(3, 100, 0.1, 10_000, 1, 2, seed=5)
    dist = ((ds.points[:, None, :] - ds.geometry_centers[None]) ** 2).sum(-1)
    nearest = dist.argmin(axis=1) + 1
    assert np.mean(nearest == ds.labels) >= 0.99


def test_feature_means_concentrate():
    r = 0.05
    ds = synthetic_data(3, 20, r, 3000, 3, 2, seed=8)
    for i in range(3):
        rows = ds.features[ds.labels == i + 1]
        bound = 5 * r / np.sqrt(len(rows))
        assert np.all(np.abs(rows.mean(axis=0) - ds.feature_centers[i]) <= bound)
        assert np.allclose(rows.std(axis=0), r, rtol=0.2)


def test_odd_feature_dimension_uses_box_muller_pairs():
    ds = synthetic_data(2, 10, 0.2, 500, 3, 1, seed=1)
    assert ds.features.shape == (500, 3) and ds.points.shape == (500, 1)


def test_metadata():
    meta = synthetic_data(2, 3, 0.5, 10, 2, 2, seed=9).metadata()
    assert meta["params"] == {"k": 2, "f": 3, "r": 0.5, "n": 10, "p1": 2, "p2": 2}
    assert meta["seed"] == 9 and meta["rng"] == "numpy.PCG64" and meta["normal"] == "box-muller"
    assert np.array(meta["feature_centers"]).shape == (2, 2)


@pytest.mark.parametrize("kwargs", [dict(k=0), dict(n=2, k=3), dict(p1=0), dict(r=0), dict(f_exponent=-1),
                                    dict(seed=-1)])
def test_param_validation(kwargs):
    base = dict(k=3, f_exponent=30, r=0.02, n=300, p1=2, p2=2, seed=0)
    base.update(kwargs)
    with pytest.raises(ValueError):
        SynthParams(**base)


class TestAri:
    def test_identical_and_relabelled(self):
        assert adjusted_rand_index([1, 1, 2, 3], [7, 7, 4, 5]) == 1.0

    def test_singletons_vs_one_cluster(self):
        assert adjusted_rand_index([1, 2, 3, 4], [1, 1, 1, 1]) == 0.0

    def test_contingency_example(self):
        assert adjusted_rand_index([1, 1, 2, 2], [1, 1, 1, 2]) == pytest.approx(
            ari_contingency([1, 1, 2, 2], [1, 1, 1, 2]), abs=1e-15)
        assert adjusted_rand_index([1, 1, 2, 2], [1, 1, 1, 2]) == pytest.approx(0.0, abs=1e-15)

    def test_random_against_oracle(self, rng):
        for _ in range(20):
            a, b = rng.integers(0, 4, 30), rng.integers(0, 3, 30)
            assert adjusted_rand_index(a, b) == pytest.approx(ari_contingency(a, b), abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            adjusted_rand_index([1, 2], [1, 2, 3])
