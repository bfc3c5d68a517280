"""Evaluation metrics: neighborhood concordance, clustering quality, purity.

All neighbor computations are exact (dense pairwise distances) with a fixed
tie rule — equal distances are broken toward the smaller point index — so
every metric is deterministic and reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InputError
from .linalg import as_matrix
from .simulate import _stream
from .transport import squared_distance_matrix

DEFAULT_NEIGHBORS = 50


@dataclass(frozen=True)
class NeighborSets:
    """k nearest neighbors per point: indices[i] are i's neighbors, nearest first."""

    k: int
    indices: np.ndarray  # (N, k) integer


def _validated_labels(labels, count: int) -> np.ndarray:
    lab = np.asarray(labels)
    if lab.shape != (count,):
        raise InputError(f"labels must be a vector of length {count}, got shape {lab.shape}")
    if not np.issubdtype(lab.dtype, np.integer):
        if np.issubdtype(lab.dtype, np.floating) and np.all(lab == np.round(lab)):
            lab = lab.astype(int)
        else:
            raise InputError("labels must be integers")
    return lab


def knn(points, k: int) -> NeighborSets:
    """Exact k nearest neighbors under Euclidean distance.

    Ties are broken toward the smaller index (stable sort on squared
    distances).  A point is never its own neighbor.
    """
    P = as_matrix(points, "points")
    N = P.shape[0]
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise InputError(f"k must be an integer, got {k!r}")
    if k < 1 or k > N - 1:
        raise DimensionError(f"k must be in [1, {N - 1}], got {k}")
    D2 = squared_distance_matrix(P, P)
    np.fill_diagonal(D2, np.inf)
    order = np.argsort(D2, axis=1, kind="stable")
    return NeighborSets(k=int(k), indices=np.ascontiguousarray(order[:, :k]))


def jaccard_concordance(embedded, latent, k: int = DEFAULT_NEIGHBORS) -> float:
    """Mean Jaccard overlap between embedded-space and latent-space neighborhoods.

    Both inputs must list the same points in the same order (typically both
    clouds pooled).  For each point the k-neighbor sets are compared by
    |intersection| / |union|, and the mean over points is returned.
    """
    E = as_matrix(embedded, "embedded")
    L = as_matrix(latent, "latent")
    if E.shape[0] != L.shape[0]:
        raise InputError(
            f"embedded and latent must list the same points, got {E.shape[0]} vs {L.shape[0]}"
        )
    got = knn(E, k).indices
    want = knn(L, k).indices
    N = E.shape[0]
    member = np.zeros((N, N), dtype=bool)
    rows = np.repeat(np.arange(N), k)
    member[rows, got.ravel()] = True
    inter = member[rows, want.ravel()].reshape(N, k).sum(axis=1)
    return float((inter / (2 * k - inter)).mean())


def _pair_count(v: np.ndarray) -> int:
    return int((v.astype(np.int64) * (v.astype(np.int64) - 1) // 2).sum())


def rand_index(labels_a, labels_b) -> float:
    """Fraction of point pairs on which two labelings agree (joined or split)."""
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.shape != b.shape or a.size < 2:
        raise InputError("labelings must have equal length >= 2")
    a = _validated_labels(a, a.size)
    b = _validated_labels(b, b.size)
    N = a.size
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    contingency = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(contingency, (ai, bi), 1)
    same_both = _pair_count(contingency.ravel())
    same_a = _pair_count(contingency.sum(axis=1))
    same_b = _pair_count(contingency.sum(axis=0))
    total = N * (N - 1) // 2
    return float((total + 2 * same_both - same_a - same_b) / total)


def _cluster_stats(P: np.ndarray, labels: np.ndarray):
    classes = np.unique(labels)
    if classes.size < 2:
        raise InputError("need at least two distinct labels")
    centroids = np.vstack([P[labels == c].mean(axis=0) for c in classes])
    scatter = np.array(
        [np.sqrt(((P[labels == c] - centroids[i]) ** 2).sum(axis=1).mean())
         for i, c in enumerate(classes)]
    )
    return classes, centroids, scatter


def davies_bouldin(points, labels) -> float:
    """Davies-Bouldin index: mean over clusters of the worst scatter-to-separation ratio.

    Scatter is the RMS distance to the centroid; separation is the centroid
    distance.  Coincident centroids make the ratio +inf, so the index is
    +inf whenever two clusters share a centroid.  Lower is better.
    """
    P = as_matrix(points, "points")
    labels = _validated_labels(labels, P.shape[0])
    classes, centroids, scatter = _cluster_stats(P, labels)
    K = classes.size
    M = np.sqrt(squared_distance_matrix(centroids, centroids))
    ratios = np.full((K, K), -np.inf)
    for i in range(K):
        for j in range(K):
            if i == j:
                continue
            ratios[i, j] = (scatter[i] + scatter[j]) / M[i, j] if M[i, j] > 0 else np.inf
    return float(ratios.max(axis=1).mean())


def silhouette_mean(points, labels) -> float:
    """Mean silhouette width under Euclidean distance.

    For each point, a = mean distance to its own cluster's other members and
    b = smallest mean distance to another cluster; the width is
    (b - a) / max(a, b).  Points in singleton clusters score 0, as do points
    where both means vanish.
    """
    P = as_matrix(points, "points")
    labels = _validated_labels(labels, P.shape[0])
    classes = np.unique(labels)
    if classes.size < 2:
        raise InputError("need at least two distinct labels")
    D = np.sqrt(squared_distance_matrix(P, P))
    N = P.shape[0]
    masks = [labels == c for c in classes]
    sizes = np.array([mask.sum() for mask in masks])
    # mean distance from every point to every cluster
    sums = np.stack([D[:, mask].sum(axis=1) for mask in masks], axis=1)  # (N, K)
    scores = np.zeros(N)
    for i in range(N):
        ci = int(np.nonzero(classes == labels[i])[0][0])
        if sizes[ci] == 1:
            continue
        a = sums[i, ci] / (sizes[ci] - 1)
        b = np.inf
        for cj in range(classes.size):
            if cj != ci:
                b = min(b, sums[i, cj] / sizes[cj])
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


def neighbor_purity(points, labels, k: int = DEFAULT_NEIGHBORS) -> float:
    """Mean fraction of same-label points inside each point's k-NN ball.

    The ball radius is the distance to the k-th nearest neighbor; every
    other point at distance <= radius counts (there may be more than k under
    ties), and the fraction sharing the center's label is averaged.
    """
    P = as_matrix(points, "points")
    labels = _validated_labels(labels, P.shape[0])
    N = P.shape[0]
    nbrs = knn(P, k)
    D2 = squared_distance_matrix(P, P)
    np.fill_diagonal(D2, np.inf)
    radius2 = D2[np.arange(N), nbrs.indices[:, -1]]
    inside = D2 <= radius2[:, None]
    same = labels[None, :] == labels[:, None]
    return float(((inside & same).sum(axis=1) / inside.sum(axis=1)).mean())


def _lloyd(P: np.ndarray, centers: np.ndarray, max_iter: int):
    k = centers.shape[0]
    labels = np.argmin(squared_distance_matrix(P, centers), axis=1)
    for _ in range(max_iter):
        for c in range(k):
            mask = labels == c
            if mask.any():
                centers[c] = P[mask].mean(axis=0)
            else:
                # Re-seed an empty cluster at the point farthest from its center.
                d2 = np.min(squared_distance_matrix(P, centers), axis=1)
                centers[c] = P[int(np.argmax(d2))]
        new_labels = np.argmin(squared_distance_matrix(P, centers), axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    wcss = float(((P - centers[labels]) ** 2).sum())
    return labels, wcss


def _seed_centers(P: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-weighted greedy seeding: next center drawn with prob ~ min squared distance."""
    N = P.shape[0]
    chosen = [int(rng.integers(N))]
    for _ in range(k - 1):
        d2 = np.min(squared_distance_matrix(P, P[chosen]), axis=1)
        total = d2.sum()
        if total > 0:
            chosen.append(int(rng.choice(N, p=d2 / total)))
        else:
            # All remaining mass sits on already-chosen points; take the
            # first index not yet used to keep the draw well-defined.
            rest = [i for i in range(N) if i not in chosen]
            chosen.append(rest[0] if rest else chosen[-1])
    return P[chosen].copy()


def kmeans(points, k: int, seed: int = 0, restarts: int = 10, max_iter: int = 200) -> np.ndarray:
    """Lloyd's algorithm with distance-weighted seeding, best of ``restarts``.

    Restart r uses its own counter-based stream derived from (seed, r), so
    results are reproducible.  Empty clusters are re-seeded at the point
    farthest from its assigned center.  Returns the labeling with the lowest
    within-cluster sum of squares.
    """
    P = as_matrix(points, "points")
    N = P.shape[0]
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise InputError(f"k must be an integer, got {k!r}")
    if k < 1 or k > N:
        raise DimensionError(f"k must be in [1, {N}], got {k}")
    if not isinstance(restarts, (int, np.integer)) or restarts < 1:
        raise InputError(f"restarts must be a positive integer, got {restarts!r}")
    if not isinstance(max_iter, (int, np.integer)) or max_iter < 1:
        raise InputError(f"max_iter must be a positive integer, got {max_iter!r}")

    best_labels, best_wcss = None, np.inf
    for restart in range(restarts):
        rng = _stream(seed, 3, restart)  # role 3: clustering restarts
        centers = _seed_centers(P, int(k), rng)
        labels, wcss = _lloyd(P, centers, int(max_iter))
        if wcss < best_wcss:
            best_labels, best_wcss = labels, wcss
    return best_labels


__all__ = [
    "NeighborSets",
    "knn",
    "jaccard_concordance",
    "rand_index",
    "davies_bouldin",
    "silhouette_mean",
    "neighbor_purity",
    "kmeans",
    "DEFAULT_NEIGHBORS",
]
