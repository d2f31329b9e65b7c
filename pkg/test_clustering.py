#!/usr/bin/env python3
"""
Site clustering tests: k-means restarts, silhouette selection of k and the
drift-profile features used to pick the low-drift cluster.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the path
sys.path.insert(0, str(Path(__file__).parent))

from data.clustering import (
    ClusteringError,
    KMeansResult,
    kmeans,
    kmeans_cluster,
    low_drift_sites,
    silhouette_score,
    site_drift_summary,
)


def two_blobs(seed=0, per_blob=6):
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, 0.05, size=(per_blob, 2))
    b = rng.normal(5.0, 0.05, size=(per_blob, 2))
    return np.vstack([a, b])


def test_silhouette_of_a_hand_computed_example():
    points = np.array([[0.0], [1.0], [10.0], [11.0]])
    expected = (9.5 / 10.5 + 8.5 / 9.5) / 2.0
    assert silhouette_score(points, [0, 0, 1, 1]) == pytest.approx(expected)


def test_silhouette_needs_two_to_n_minus_one_clusters():
    points = np.arange(4.0)
    with pytest.raises(ClusteringError):
        silhouette_score(points, [0, 0, 0, 0])
    with pytest.raises(ClusteringError):
        silhouette_score(points, [0, 1, 2, 3])


def test_kmeans_separates_blobs():
    points = two_blobs()
    result = kmeans(points, 2, seed=1)
    assert len(set(result.labels[:6])) == 1
    assert len(set(result.labels[6:])) == 1
    assert result.labels[0] != result.labels[-1]
    assert result.inertia < 1.0


def test_kmeans_is_deterministic_for_a_seed():
    points = np.random.default_rng(3).normal(size=(30, 3))
    a, b = kmeans(points, 4, seed=7), kmeans(points, 4, seed=7)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert a.inertia == b.inertia


def test_more_restarts_never_increase_inertia():
    points = np.random.default_rng(4).normal(size=(40, 2))
    assert kmeans(points, 5, n_init=20, seed=0).inertia <= kmeans(points, 5, n_init=1, seed=0).inertia


def test_silhouette_selects_the_true_number_of_blobs():
    result = kmeans_cluster(two_blobs(), [2, 3, 4], seed=0)
    assert result.k == 2
    assert set(result.scores) == {2, 3, 4}
    assert result.silhouette == max(result.scores.values())


def test_single_candidate_is_used_as_is():
    result = kmeans_cluster(two_blobs(), [3], seed=0)
    assert result.k == 3
    assert result.silhouette is not None


def test_invalid_k():
    with pytest.raises(ClusteringError):
        kmeans(np.zeros((3, 1)), 4)
    with pytest.raises(ClusteringError):
        kmeans(np.zeros((3, 1)), 0)
    with pytest.raises(ClusteringError):
        kmeans_cluster(np.zeros((3, 1)), [])


def test_drift_summary_grows_with_a_level_shift():
    rng = np.random.default_rng(0)
    stationary = rng.normal(size=1000)
    shifted = stationary.copy()
    shifted[650:] += 3.0
    calm, drifting = site_drift_summary(stationary), site_drift_summary(shifted)
    assert calm.shape == (3,)
    assert calm[0] < 0.3 and calm[2] < 0.15
    assert drifting[0] > 2.0 and drifting[2] > 0.7


def test_drift_summary_needs_enough_values():
    with pytest.raises(ClusteringError):
        site_drift_summary(np.array([1.0, 2.0, np.nan]))


def test_low_drift_cluster_is_the_one_nearest_the_origin():
    result = KMeansResult(k=2, labels=np.array([1, 0, 1, 0]),
                          centroids=np.array([[0.1, 0.0, 0.05], [2.0, 0.5, 0.9]]), inertia=0.0)
    assert low_drift_sites(["a", "b", "c", "d"], result) == ["b", "d"]
