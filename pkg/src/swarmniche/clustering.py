"""Lloyd k-means with restarts, silhouette scoring, and cluster-count selection.

Distances are plain euclidean in decision-variable space; nothing is scaled
before clustering.  Points are typically particle pbest positions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

_MAX_LLOYD_ITERS = 100


@dataclass(frozen=True, eq=False)
class ClusterModel:
    centroids: np.ndarray        # (k, d)
    labels: np.ndarray           # (n,)
    wcss: float
    k: int
    mean_silhouette: float


def _pairwise_distances(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _assign(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.argmin(np.sum(diff * diff, axis=-1), axis=1)


def _wcss(points: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> float:
    return float(np.sum((points - centroids[labels]) ** 2))


def _lloyd(points: np.ndarray, k: int, rng: np.random.Generator):
    """One Lloyd run from centroids sampled among the points.

    Returns (centroids, labels, wcss, wcss_history).  Empty clusters are
    re-seeded with the point currently farthest from its assigned centroid.
    """
    n = len(points)
    centroids = points[rng.choice(n, size=k, replace=False)].copy()
    labels = _assign(points, centroids)
    history = [_wcss(points, centroids, labels)]
    for _ in range(_MAX_LLOYD_ITERS):
        for j in range(k):
            members = labels == j
            if members.any():
                centroids[j] = points[members].mean(axis=0)
            else:
                dist = np.linalg.norm(points - centroids[labels], axis=1)
                runaway = int(np.argmax(dist))
                centroids[j] = points[runaway]
                labels[runaway] = j
        new_labels = _assign(points, centroids)
        history.append(_wcss(points, centroids, new_labels))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return centroids, labels, history[-1], history


def silhouette(points: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette score s = (b - a) / max(a, b) over all points.

    a is the mean intra-cluster distance, b the smallest mean distance to any
    other cluster.  Points in singleton clusters score 0 by convention.
    """
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    cluster_ids = np.unique(labels)
    if len(cluster_ids) < 2:
        raise ConfigurationError("silhouette needs at least two clusters")
    dist = _pairwise_distances(points)
    scores = np.zeros(len(points))
    for i in range(len(points)):
        own = labels == labels[i]
        n_own = int(own.sum())
        if n_own <= 1:
            continue
        a = dist[i, own].sum() / (n_own - 1)
        b = min(
            dist[i, labels == c].mean()
            for c in cluster_ids if c != labels[i]
        )
        denom = max(a, b)
        if denom > 0:
            scores[i] = (b - a) / denom
    return float(scores.mean())


def kmeans(points: np.ndarray, k: int, restarts: int = 10,
           rng: np.random.Generator | None = None) -> ClusterModel:
    """Best-of-`restarts` Lloyd clustering by WCSS."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ConfigurationError("points must be a 2D array (n, d)")
    if restarts < 1:
        raise ConfigurationError("restarts must be >= 1")
    distinct = len(np.unique(points, axis=0))
    if k < 2 or k > distinct:
        raise ConfigurationError(
            f"k must lie in [2, {distinct}] (distinct points), got {k}"
        )
    rng = rng if rng is not None else np.random.default_rng()

    best = None
    for _ in range(restarts):
        centroids, labels, wcss, _ = _lloyd(points, k, rng)
        if best is None or wcss < best[2]:
            best = (centroids, labels, wcss)
    centroids, labels, wcss = best
    return ClusterModel(
        centroids=centroids, labels=labels, wcss=wcss, k=k,
        mean_silhouette=silhouette(points, labels),
    )


def select_k(points: np.ndarray, k_min: int = 2, k_max: int | None = None,
             restarts: int = 10, rng: np.random.Generator | None = None) -> ClusterModel:
    """Pick the cluster count in [k_min, N/2] with the best mean silhouette.

    Ties break toward smaller k.  Fewer than four points fall back to k = 2
    when that is feasible at all.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    distinct = len(np.unique(points, axis=0))
    rng = rng if rng is not None else np.random.default_rng()
    if n < 4:
        if distinct >= 2:
            return kmeans(points, 2, restarts=restarts, rng=rng)
        raise ConfigurationError("need at least two distinct points to cluster")
    if k_max is None:
        k_max = n // 2
    k_max = min(k_max, distinct)
    if k_max < k_min:
        if distinct >= 2:
            return kmeans(points, min(2, distinct), restarts=restarts, rng=rng)
        raise ConfigurationError("need at least two distinct points to cluster")

    best: ClusterModel | None = None
    for k in range(k_min, k_max + 1):
        model = kmeans(points, k, restarts=restarts, rng=rng)
        if best is None or model.mean_silhouette > best.mean_silhouette:
            best = model
    return best
