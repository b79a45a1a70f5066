"""MiniBatch K-means, the alternative weak-label source.

Streaming per-center mean updates with learning rate 1/count over randomly
drawn minibatches; k-means++ seeding on a subsample. Fully deterministic
for a fixed seed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .labeling import relabel_contiguous

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    batch_size: int = 1024
    max_iters: int = 100
    seed: int = 0
    init_subsample_factor: int = 10

    def validate(self, n: int) -> None:
        if not 1 <= self.k <= n:
            raise ValueError(f"k={self.k} must lie in [1, {n}]")
        if self.batch_size < 1 or self.max_iters < 0:
            raise ValueError("batch_size must be >= 1 and max_iters >= 0")


def _sq_dist_to_centers(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    pp = np.einsum("ij,ij->i", points, points)[:, None]
    cc = np.einsum("ij,ij->i", centers, centers)[None, :]
    return np.maximum(pp + cc - 2.0 * points @ centers.T, 0.0)


def _kmeanspp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: subsequent centers drawn with prob proportional to
    squared distance from the nearest already-chosen center."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    centers[0] = points[rng.integers(n)]
    best = _sq_dist_to_centers(points, centers[:1])[:, 0]
    for c in range(1, k):
        total = best.sum()
        if total == 0.0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=best / total)
        centers[c] = points[idx]
        best = np.minimum(best, _sq_dist_to_centers(points, centers[c:c + 1])[:, 0])
    return centers


def quantization_cost(points: np.ndarray, centers: np.ndarray) -> float:
    """Mean squared distance of every point to its nearest center."""
    points = np.asarray(points, dtype=np.float64)
    return float(_sq_dist_to_centers(points, centers).min(axis=1).mean())


def minibatch_kmeans(points: np.ndarray, cfg: KMeansConfig,
                     return_centers: bool = False):
    """Cluster rows into (at most) cfg.k groups; returns contiguous labels.

    Each iteration draws one minibatch, assigns its points against the
    current centers, then folds them into the per-center streaming means.
    Centers left without any assigned point at the end are dropped and the
    labels relabeled contiguously, so k may effectively shrink.
    """
    points = np.asarray(points, dtype=np.float64)
    if not np.all(np.isfinite(points)):
        raise ValueError("points must be finite")
    n = points.shape[0]
    cfg.validate(n)

    rng = np.random.default_rng(cfg.seed)
    sub = rng.choice(n, size=min(n, cfg.init_subsample_factor * cfg.k), replace=False)
    centers = _kmeanspp(points[sub], cfg.k, rng)
    counts = np.zeros(cfg.k, dtype=np.int64)

    batch_size = min(cfg.batch_size, n)
    for _ in range(cfg.max_iters):
        batch = rng.choice(n, size=batch_size, replace=False)
        assign = np.argmin(_sq_dist_to_centers(points[batch], centers), axis=1)
        for c in np.unique(assign):
            member = points[batch[assign == c]]
            new_count = counts[c] + member.shape[0]
            # streaming mean: equivalent to per-point updates at rate 1/count
            centers[c] = (counts[c] * centers[c] + member.sum(axis=0)) / new_count
            counts[c] = new_count

    labels = np.argmin(_sq_dist_to_centers(points, centers), axis=1)
    used = np.unique(labels)
    if used.size < cfg.k:
        log.warning("minibatch_kmeans: %d of %d clusters ended up empty; relabeling",
                    cfg.k - used.size, cfg.k)
    labels = relabel_contiguous(labels)
    if return_centers:
        return labels, centers
    return labels
