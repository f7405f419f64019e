import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.spatial.distance import pdist, squareform

from src.embed import affinities, kl_divergence_and_gradient, tsne
from src.errors import ConfigError


def test_equidistant_points_get_uniform_affinities():
    aff = affinities(np.eye(3), perplexity=2)
    expected = np.full((3, 3), 1 / 6)
    np.fill_diagonal(expected, 0.0)
    assert_allclose(aff.P, expected, atol=1e-12)


def test_joint_probabilities_are_normalized_and_symmetric(rng):
    P = affinities(rng.normal(size=(20, 5)), perplexity=5).P
    assert abs(P.sum() - 1.0) < 1e-9
    assert_allclose(P, P.T, atol=0)
    assert np.all(np.diag(P) == 0)
    assert np.all(P >= 0)


def test_calibrated_rows_hit_the_target_entropy(rng):
    features = rng.normal(size=(50, 10))
    aff = affinities(features, perplexity=30)
    sq = squareform(pdist(features, "sqeuclidean"))
    for i in range(50):
        d = np.delete(sq[i], i)
        p = np.exp(-aff.betas[i] * (d - d.min()))
        p /= p.sum()
        entropy = -np.sum(p[p > 0] * np.log(p[p > 0]))
        assert abs(entropy - np.log(30)) <= 1e-4


def test_perplexity_bounds():
    features = np.arange(10, dtype=float).reshape(5, 2)
    with pytest.raises(ConfigError, match="perplexity too large"):
        affinities(features, perplexity=5)
    with pytest.raises(ConfigError):
        affinities(features, perplexity=1)


def test_gradient_matches_central_differences(rng):
    for _ in range(5):
        P = affinities(rng.normal(size=(6, 3)), perplexity=2).P
        points = rng.normal(size=(6, 2))
        _, grad = kl_divergence_and_gradient(points, P)
        numeric = np.zeros_like(points)
        eps = 1e-6
        for idx in np.ndindex(points.shape):
            up, down = points.copy(), points.copy()
            up[idx] += eps
            down[idx] -= eps
            numeric[idx] = (kl_divergence_and_gradient(up, P)[0]
                            - kl_divergence_and_gradient(down, P)[0]) / (2 * eps)
        assert_allclose(grad, numeric, rtol=1e-5, atol=1e-8)


def test_tsne_is_deterministic(rng):
    features = rng.normal(size=(12, 4))
    a = tsne(features, perplexity=3, iters=100, seed=9)
    b = tsne(features, perplexity=3, iters=100, seed=9)
    np.testing.assert_array_equal(a.points, b.points)
    assert a.kl_trace == b.kl_trace


def test_kl_trace_decreases_overall_and_points_stay_centered(rng):
    features = np.vstack([rng.normal(0, 1, size=(15, 4)), rng.normal(8, 1, size=(15, 4))])
    emb = tsne(features, perplexity=5, iters=300, seed=1)
    assert len(emb.kl_trace) == 301
    assert emb.kl_trace[-1] <= emb.kl_trace[0]
    assert min(emb.kl_trace) >= -1e-12
    assert np.all(np.isfinite(emb.points))
    assert_allclose(emb.points.mean(axis=0), 0.0, atol=1e-9)


def test_duplicate_rows_embed_close_together(rng):
    features = rng.normal(size=(30, 5))
    features = np.vstack([features, features[:1]])
    emb = tsne(features, perplexity=5, iters=500, seed=2)
    dist = squareform(pdist(emb.points))
    assert dist[0, 30] < np.percentile(pdist(emb.points), 95)


def test_square_corners_keep_their_neighbours():
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    emb = tsne(corners, perplexity=2, seed=0)
    dist = squareform(pdist(emb.points))
    for i in range(4):
        assert int(np.argmax(dist[i])) == (i + 2) % 4


def test_embedding_ignores_feature_translation(rng):
    features = rng.integers(0, 10, size=(15, 4)).astype(float)
    a = tsne(features, perplexity=4, iters=200, seed=5)
    b = tsne(features + 7.0, perplexity=4, iters=200, seed=5)
    np.testing.assert_array_equal(a.points, b.points)


def test_tsne_needs_an_iteration(rng):
    with pytest.raises(ConfigError):
        tsne(rng.normal(size=(6, 2)), perplexity=2, iters=0)


def test_identical_rows_share_one_position(rng):
    features = rng.normal(size=(12, 3))
    features = np.vstack([features, np.repeat(features[:1], 5, axis=0), features[3:4]])
    emb = tsne(features, perplexity=4, iters=300, seed=3)
    for twin in range(12, 17):
        np.testing.assert_array_equal(emb.points[twin], emb.points[0])
    np.testing.assert_array_equal(emb.points[17], emb.points[3])
    assert np.all(pdist(emb.points[:12]) > 0)
