import numpy as np
import pytest

from mrk import RngStream
from mrk.analysis import (
    FeatureSet,
    TensorDump,
    TensorEntry,
    gradient_normalized_margins,
    k_variance,
    kvgm,
    load_dump,
    load_feature_set,
    pca_project,
    save_dump,
    wasserstein_exact,
    weight_norms,
)
from mrk.errors import ValidationError


def two_cluster_set(seed=0, n=200, sep=3.0, spread=0.3, dim=2):
    g = np.random.default_rng(seed)
    a = g.normal(0, spread, (n, dim)) + np.r_[-sep, np.zeros(dim - 1)]
    b = g.normal(0, spread, (n, dim)) + np.r_[sep, np.zeros(dim - 1)]
    feats = np.concatenate([a, b])
    labels = np.array([0] * n + [1] * n)
    w = np.zeros((2, dim))
    w[0, 0], w[1, 0] = -1.0, 1.0
    return FeatureSet(feats, labels, w, np.zeros(2))


# ---------------------------------------------------------------------------
# PCA

def test_pca_collinear_data_first_ratio_one():
    t = np.linspace(-2, 2, 40)
    feats = np.stack([t, 2 * t], axis=1)
    fs_coords, ratios = pca_project(feats, 2)
    assert ratios[0] == pytest.approx(1.0, abs=1e-6)


def test_pca_isotropic_cloud_ratios_equal():
    g = np.random.default_rng(1)
    feats = g.normal(0, 1, (20_000, 2))
    _, ratios = pca_project(feats, 2)
    assert ratios[0] == pytest.approx(ratios[1], rel=0.05)


def test_pca_full_rank_reconstruction():
    g = np.random.default_rng(2)
    feats = g.normal(0, 1, (50, 4))
    coords, _ = pca_project(feats, 4)
    # recompute components from a second call to rebuild the basis
    centered = feats - feats.mean(axis=0)
    # orthogonality: projecting back recovers the centered data
    cov = centered.T @ centered / 49
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    comps = eigvecs[:, order]
    for j in range(4):
        pivot = np.argmax(np.abs(comps[:, j]))
        if comps[pivot, j] < 0:
            comps[:, j] = -comps[:, j]
    recon = coords @ comps.T
    assert np.abs(recon - centered).max() < 1e-5


def test_pca_sign_convention_deterministic():
    g = np.random.default_rng(3)
    feats = g.normal(0, 1, (30, 3))
    c1, _ = pca_project(feats, 2)
    c2, _ = pca_project(feats.copy(), 2)
    assert np.array_equal(c1, c2)


def test_pca_translation_invariance():
    g = np.random.default_rng(4)
    feats = g.normal(0, 1, (40, 3))
    c1, r1 = pca_project(feats, 2)
    c2, r2 = pca_project(feats + np.array([5.0, -3.0, 11.0]), 2)
    assert np.allclose(c1, c2, atol=1e-8)
    assert np.allclose(r1, r2, atol=1e-12)


def test_pca_rank_deficient_pads_zero():
    feats = np.zeros((10, 3))
    feats[:, 0] = np.arange(10)
    with pytest.warns(UserWarning, match="rank"):
        coords, ratios = pca_project(feats, 2)
    assert np.allclose(coords[:, 1], 0.0)
    assert ratios[1] == 0.0


# ---------------------------------------------------------------------------
# margins

def test_margin_hand_case():
    # 1-D, w = (+1, -1), b = 0, h = 3, true class 0:
    # logits (3, -3), margin = 6 / ||(1) - (-1)|| = 3
    fs = FeatureSet(
        features=np.array([[3.0], [2.0], [-1.0], [-4.0]]),
        labels=np.array([0, 0, 1, 1]),
        weights=np.array([[1.0], [-1.0]]),
        biases=np.zeros(2),
    )
    margins = gradient_normalized_margins(fs)
    assert margins[0] == pytest.approx(3.0)
    assert margins[1] == pytest.approx(2.0)
    assert margins[2] == pytest.approx(1.0)


def test_margin_scale_invariance():
    fs = two_cluster_set(5)
    m1 = gradient_normalized_margins(fs)
    scaled = FeatureSet(fs.features, fs.labels, 7.5 * fs.weights, 7.5 * fs.biases)
    m2 = gradient_normalized_margins(scaled)
    assert np.abs(m1 - m2).max() < 1e-5


def test_margin_misclassified_negative():
    fs = FeatureSet(
        features=np.array([[3.0], [1.0], [-2.0], [-0.5]]),
        labels=np.array([1, 1, 0, 0]),  # all on the wrong side
        weights=np.array([[1.0], [-1.0]]),
        biases=np.zeros(2),
    )
    margins = gradient_normalized_margins(fs)
    assert (margins < 0).all()


def test_margin_identical_weights_sentinel():
    fs = FeatureSet(
        features=np.array([[1.0], [2.0], [3.0], [4.0]]),
        labels=np.array([0, 1, 0, 1]),
        weights=np.array([[1.0], [1.0]]),
        biases=np.zeros(2),
    )
    assert np.isnan(gradient_normalized_margins(fs)).all()


# ---------------------------------------------------------------------------
# Wasserstein / k-variance

def test_wasserstein_identical_sets_zero():
    pts = np.random.default_rng(0).normal(0, 1, (10, 3))
    assert wasserstein_exact(pts, pts) == 0.0


def test_wasserstein_1d_shift():
    a = np.array([[0.0], [1.0]])
    delta = 0.37
    assert wasserstein_exact(a, a + delta) == pytest.approx(delta, abs=1e-12)


def test_wasserstein_matches_sorted_matching_in_1d():
    g = np.random.default_rng(7)
    for _ in range(5):
        a = g.normal(0, 1, (12, 1))
        b = g.normal(0.5, 2, (12, 1))
        expected = np.abs(np.sort(a.ravel()) - np.sort(b.ravel())).mean()
        assert wasserstein_exact(a, b) == pytest.approx(expected, abs=1e-12)


def test_wasserstein_rotation_invariance():
    g = np.random.default_rng(8)
    a = g.normal(0, 1, (16, 3))
    b = g.normal(1, 1, (16, 3))
    theta = 0.7
    rot = np.array(
        [[np.cos(theta), -np.sin(theta), 0], [np.sin(theta), np.cos(theta), 0], [0, 0, 1]]
    )
    assert wasserstein_exact(a @ rot.T, b @ rot.T) == pytest.approx(
        wasserstein_exact(a, b), abs=1e-5
    )


def test_wasserstein_size_cap():
    pts = np.zeros((65, 2))
    with pytest.raises(ValidationError):
        wasserstein_exact(pts, pts)


def test_k_variance_duplicated_points_zero():
    feats = np.tile(np.array([[1.0, 2.0]]), (80, 1))
    labels = np.array([0] * 40 + [1] * 40)
    w = np.array([[1.0, 0.0], [0.0, 1.0]])
    fs = FeatureSet(feats, labels, w, np.zeros(2))
    assert k_variance(fs, k=8, repeats=3, rng=RngStream(0)) == 0.0


def test_k_variance_decreases_with_spread():
    wins = 0
    for trial in range(20):
        tight = two_cluster_set(trial, n=80, spread=0.3)
        wide = two_cluster_set(trial + 1000, n=80, spread=1.2)
        kv_tight = k_variance(tight, k=16, repeats=4, rng=RngStream(trial).child("t"))
        kv_wide = k_variance(wide, k=16, repeats=4, rng=RngStream(trial).child("w"))
        wins += kv_tight < kv_wide
    assert wins >= 18


def test_k_variance_insufficient_rows():
    fs = two_cluster_set(0, n=10)
    with pytest.raises(ValidationError):
        k_variance(fs, k=16, repeats=2, rng=RngStream(0))


# ---------------------------------------------------------------------------
# combined score

def test_kvgm_orders_separated_above_overlapping():
    for seed in range(5):
        separated = two_cluster_set(seed, n=500, sep=3.0, spread=0.3)
        overlapping = two_cluster_set(seed + 99, n=500, sep=0.5, spread=1.5)
        hi = kvgm(separated, k=32, repeats=10, rng=RngStream(seed).child("hi"))
        lo = kvgm(overlapping, k=32, repeats=10, rng=RngStream(seed).child("lo"))
        assert hi > lo


def test_kvgm_shrinking_variance_does_not_decrease():
    for seed in range(5):
        wide = two_cluster_set(seed, n=300, sep=2.0, spread=1.0)
        tight_feats = wide.features.copy()
        for c in (0, 1):
            rows = wide.labels == c
            mean = tight_feats[rows].mean(axis=0)
            tight_feats[rows] = mean + (tight_feats[rows] - mean) / 2.0
        tight = FeatureSet(tight_feats, wide.labels, wide.weights, wide.biases)
        v_wide = kvgm(wide, k=24, repeats=6, rng=RngStream(seed).child("a"))
        v_tight = kvgm(tight, k=24, repeats=6, rng=RngStream(seed).child("a"))
        assert v_tight >= v_wide


def test_kvgm_duplicated_points_infinite():
    feats = np.tile(np.array([[1.0, 0.0]]), (80, 1))
    feats[40:] = [-1.0, 0.0]
    labels = np.array([0] * 40 + [1] * 40)
    w = np.array([[1.0, 0.0], [-1.0, 0.0]])
    fs = FeatureSet(feats, labels, w, np.zeros(2))
    with pytest.warns(UserWarning, match="zero"):
        assert kvgm(fs, k=8, repeats=2, rng=RngStream(1)) == np.inf


# ---------------------------------------------------------------------------
# weight norms and dump io

def test_weight_norms_three_four_five():
    dump = TensorDump((TensorEntry("w", 0, (2,), np.array([3.0, 4.0])),))
    assert weight_norms(dump) == [(0, 5.0)]


def test_weight_norms_zero_tensors():
    dump = TensorDump(
        (
            TensorEntry("a", 0, (3,), np.zeros(3)),
            TensorEntry("b", 1, (2, 2), np.zeros(4)),
        )
    )
    assert weight_norms(dump) == [(0, 0.0), (1, 0.0)]


def test_weight_norms_matches_direct_sum_oracle():
    g = np.random.default_rng(3)
    entries = []
    expected = {}
    for i in range(6):
        depth = i % 3
        data = g.normal(0, 1, (4, 3)).astype(np.float32)
        entries.append(TensorEntry(f"t{i}", depth, (4, 3), data))
        expected[depth] = expected.get(depth, 0.0) + float(np.sum(data.astype(np.float64) ** 2))
    rows = weight_norms(TensorDump(tuple(entries)))
    for depth, norm in rows:
        assert norm == pytest.approx(np.sqrt(expected[depth]), abs=1e-6)


def test_weight_norms_empty_dump():
    with pytest.raises(ValidationError):
        weight_norms(TensorDump(()))


def test_tensor_entry_shape_validation():
    with pytest.raises(ValidationError):
        TensorEntry("bad", 0, (3, 3), np.zeros(4))


def test_dump_roundtrip(tmp_path):
    g = np.random.default_rng(0)
    entries = (
        TensorEntry("conv1", 0, (2, 3), g.normal(0, 1, 6).astype(np.float32)),
        TensorEntry("conv2", 1, (4,), g.normal(0, 1, 4).astype(np.float32)),
    )
    manifest = tmp_path / "dump.json"
    save_dump(TensorDump(entries), manifest)
    back = load_dump(manifest)
    assert len(back.entries) == 2
    for orig, loaded in zip(entries, back.entries):
        assert loaded.name == orig.name
        assert loaded.depth == orig.depth
        assert loaded.shape == orig.shape
        assert np.array_equal(loaded.data, orig.data)


def test_dump_malformed_manifest(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ValidationError):
        load_dump(p)


def test_load_feature_set_missing_tensor(tmp_path):
    manifest = tmp_path / "d.json"
    save_dump(TensorDump((TensorEntry("features", 0, (2, 2), np.zeros(4, np.float32)),)), manifest)
    with pytest.raises(ValidationError, match="missing tensor"):
        load_feature_set(load_dump(manifest))
