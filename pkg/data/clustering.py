# data/clustering.py
"""K-means site clustering by drift profile.

Lloyd iterations from k-means++ seeds, best of n_init restarts by inertia;
k is chosen among candidates by the mean silhouette score.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from robustness.ks import ks_2samp
from utils.logger import get_logger

logger = get_logger(__name__)

N_INIT = 20
MAX_ITER = 300


class ClusteringError(ValueError):
    pass


@dataclass
class KMeansResult:
    k: int
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    silhouette: Optional[float] = None
    scores: Dict[int, float] = field(default_factory=dict)


def _sq_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seed centroids with probability proportional to squared distance from the chosen ones."""
    n = points.shape[0]
    centroids = [points[rng.integers(n)]]
    closest = _sq_distances(points, np.array(centroids))[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        index = rng.integers(n) if total <= 0 else rng.choice(n, p=closest / total)
        centroids.append(points[index])
        closest = np.minimum(closest, _sq_distances(points, points[index][None, :])[:, 0])
    return np.array(centroids)


def lloyd(points: np.ndarray, centroids: np.ndarray,
          max_iter: int = MAX_ITER) -> Tuple[np.ndarray, np.ndarray, float]:
    """Alternate assignment and mean updates until assignments stop changing."""
    centroids = centroids.copy()
    labels = None
    for _ in range(max_iter):
        distances = _sq_distances(points, centroids)
        new_labels = distances.argmin(axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(centroids.shape[0]):
            members = points[labels == j]
            if members.size:
                centroids[j] = members.mean(axis=0)
            else:
                # Empty cluster: move it onto the point worst served by its centroid
                worst = distances[np.arange(len(points)), labels].argmax()
                centroids[j] = points[worst]
    distances = _sq_distances(points, centroids)
    labels = distances.argmin(axis=1)
    inertia = float(distances[np.arange(len(points)), labels].sum())
    return labels, centroids, inertia


def kmeans(points, k: int, n_init: int = N_INIT, seed: int = 0) -> KMeansResult:
    """Best of n_init seeded restarts by inertia."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if k < 1:
        raise ClusteringError(f"k must be positive, got {k}")
    if k > points.shape[0]:
        raise ClusteringError(f"k={k} exceeds the number of points ({points.shape[0]})")

    rng = np.random.default_rng(seed)
    best: Optional[KMeansResult] = None
    for _ in range(n_init):
        labels, centroids, inertia = lloyd(points, kmeans_plus_plus(points, k, rng))
        if best is None or inertia < best.inertia:
            best = KMeansResult(k, labels, centroids, inertia)
    return best


def silhouette_score(points, labels) -> float:
    """Mean silhouette over all points; singleton clusters score 0."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    labels = np.asarray(labels)
    clusters = np.unique(labels)
    if not 2 <= len(clusters) <= len(points) - 1:
        raise ClusteringError(f"silhouette needs 2..n-1 clusters, got {len(clusters)}")

    distances = np.sqrt(_sq_distances(points, points))
    scores = np.zeros(len(points))
    for i in range(len(points)):
        own = labels == labels[i]
        if own.sum() == 1:
            continue
        a = distances[i, own].sum() / (own.sum() - 1)
        b = min(distances[i, labels == c].mean() for c in clusters if c != labels[i])
        scores[i] = (b - a) / max(a, b) if max(a, b) > 0 else 0.0
    return float(scores.mean())


def kmeans_cluster(points, k_candidates: Sequence[int], n_init: int = N_INIT,
                   seed: int = 0) -> KMeansResult:
    """Cluster for every candidate k and keep the one with the highest mean silhouette."""
    points = np.asarray(points, dtype=np.float64)
    candidates = sorted(set(int(k) for k in k_candidates))
    if not candidates:
        raise ClusteringError("no k candidates given")

    if len(candidates) == 1:
        result = kmeans(points, candidates[0], n_init, seed)
        if 2 <= len(np.unique(result.labels)) <= len(points) - 1:
            result.silhouette = silhouette_score(points, result.labels)
            result.scores = {result.k: result.silhouette}
        return result

    best: Optional[KMeansResult] = None
    scores: Dict[int, float] = {}
    for k in candidates:
        result = kmeans(points, k, n_init, seed)
        if not 2 <= len(np.unique(result.labels)) <= len(points) - 1:
            logger.debug(f"Skipping k={k}: silhouette undefined")
            continue
        result.silhouette = silhouette_score(points, result.labels)
        scores[k] = result.silhouette
        if best is None or result.silhouette > best.silhouette:
            best = result
    if best is None:
        raise ClusteringError(f"silhouette undefined for every candidate k in {candidates}")
    best.scores = scores
    logger.info(f"Selected k={best.k} (silhouette {best.silhouette:.3f})")
    return best


def site_drift_summary(energy: np.ndarray, train_fraction: float = 0.65,
                       test_fraction: float = 0.30) -> np.ndarray:
    """Drift profile of one site: [|mean shift| / std, |log std ratio|, KS D] between early and late rows."""
    energy = np.asarray(energy, dtype=np.float64)
    energy = energy[np.isfinite(energy)]
    n = len(energy)
    early = energy[: int(np.floor(train_fraction * n))]
    late = energy[n - int(np.floor(test_fraction * n)):]
    if early.size < 2 or late.size < 2:
        raise ClusteringError(f"series of {n} values too short for a drift summary")

    std_early = early.std() or 1.0
    std_late = late.std() or std_early
    return np.array([
        abs(late.mean() - early.mean()) / std_early,
        abs(np.log(std_late / std_early)),
        ks_2samp(early, late).statistic,
    ])


def low_drift_sites(site_ids: List[str], result: KMeansResult) -> List[str]:
    """Sites in the cluster whose centroid lies closest to the no-drift origin."""
    target = int(np.linalg.norm(result.centroids, axis=1).argmin())
    return [site for site, label in zip(site_ids, result.labels) if label == target]
