"""First-neighbor clustering hierarchy used to derive weak labels.

Each sample is linked to its single nearest neighbor and connected
components of the resulting undirected graph form the first partition;
subsequent partitions repeat the linking over cluster means of the
original samples until the cluster count would stop shrinking past 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import FeatureSet
from .labeling import UnionFind, relabel_contiguous
from .metrics import wcp

DEFAULT_CHUNK_ROWS = 512


@dataclass(frozen=True)
class PartitionHierarchy:
    """Fine-to-coarse partitions with per-partition cluster means.

    partitions[l] assigns every sample a contiguous label in [0, cluster_counts[l]);
    cluster_counts decrease strictly with l; means[l] holds the l2-normalized
    mean of the original samples in each cluster.
    """

    partitions: list[np.ndarray]
    cluster_counts: list[int]
    means: list[np.ndarray]

    @property
    def num_partitions(self) -> int:
        return len(self.partitions)

    def partition(self, index: int) -> np.ndarray:
        """1-based partition lookup; errors name the available depth L."""
        if not 1 <= index <= len(self.partitions):
            raise ValueError(
                f"partition index {index} out of range: hierarchy has L={len(self.partitions)} partitions")
        return self.partitions[index - 1]


def _unit_rows(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    norms = np.linalg.norm(points, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"zero-norm row {zero[0]}")
    return points / norms[:, None]


def first_neighbors(points: np.ndarray, chunk_rows: int = DEFAULT_CHUNK_ROWS) -> np.ndarray:
    """Index of each row's nearest other row under cosine distance.

    Distances are evaluated in float64 on l2-normalized rows, one chunk of
    rows at a time so memory stays O(chunk_rows * M). Exact ties resolve to
    the smallest index, which keeps chunked and serial results identical.
    """
    points = np.asarray(points)
    m = points.shape[0]
    if m < 2:
        raise ValueError(f"first_neighbors needs at least 2 rows, got {m}")
    unit = _unit_rows(points)
    kappa = np.empty(m, dtype=np.int64)
    for start in range(0, m, chunk_rows):
        stop = min(start + chunk_rows, m)
        dist = 1.0 - unit[start:stop] @ unit.T
        dist[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
        kappa[start:stop] = np.argmin(dist, axis=1)
    return kappa


def link_components(kappa: np.ndarray) -> np.ndarray:
    """Connected components of the graph with an edge (i, kappa[i]) per i.

    Samples sharing a first neighbor land in one component through their
    common endpoint, so the shared-neighbor adjacency clause needs no extra
    edges. Labels are contiguous, numbered by first occurrence.
    """
    kappa = np.asarray(kappa, dtype=np.int64)
    uf = UnionFind(kappa.size)
    for i, j in enumerate(kappa.tolist()):
        uf.union(i, j)
    return uf.labels()


def cluster_means(points: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-cluster mean of rows, l2-normalized; labels must be contiguous."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    m = int(labels.max()) + 1
    counts = np.bincount(labels, minlength=m)
    if np.any(counts == 0):
        raise ValueError(f"empty cluster {int(np.flatnonzero(counts == 0)[0])}")
    sums = np.zeros((m, points.shape[1]), dtype=np.float64)
    np.add.at(sums, labels, points)
    means = sums / counts[:, None]
    norms = np.linalg.norm(means, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"cluster {zero[0]} has a zero-norm mean")
    return means / norms[:, None]


def finch_hierarchy(data, chunk_rows: int = DEFAULT_CHUNK_ROWS) -> PartitionHierarchy:
    """Build the full partition hierarchy for a FeatureSet or matrix.

    The recursion links l2-normalized cluster means of the original samples
    (not means of means) and stops before a partition would collapse to a
    single cluster or fail to reduce the count.
    """
    points = data.features if isinstance(data, FeatureSet) else np.asarray(data)
    if points.shape[0] < 2:
        raise ValueError("hierarchy needs at least 2 samples")

    labels = link_components(first_neighbors(points, chunk_rows))
    partitions = [labels]
    counts = [int(labels.max()) + 1]
    means = [cluster_means(points, labels)]

    while counts[-1] > 2:
        kappa = first_neighbors(means[-1], chunk_rows)
        meta = link_components(kappa)
        merged = relabel_contiguous(meta[partitions[-1]])
        m = int(merged.max()) + 1
        if m <= 1 or m >= counts[-1]:
            break
        partitions.append(merged)
        counts.append(m)
        means.append(cluster_means(points, merged))

    return PartitionHierarchy(partitions, counts, means)


def partition_purity(labels: np.ndarray, gt: np.ndarray) -> float:
    """Weighted purity of one partition against ground truth."""
    acc, _, _ = wcp(labels, gt)
    return acc
