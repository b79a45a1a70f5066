"""Ward-linkage agglomerative clustering stopped at a target cluster count.

The merge sequence is computed with the nearest-neighbor-chain algorithm and
Lance-Williams updates of the variance-increase dissimilarity

    cost(A, B) = |A||B| / (|A|+|B|) * ||mean_A - mean_B||^2,

then sorted by cost; reducibility of Ward linkage makes the sorted sequence
identical to greedy minimum-cost merging.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .labeling import UnionFind, relabel_contiguous


@dataclass(frozen=True)
class HacResult:
    """Labels at the stopping count plus the merges that produced them.

    merge_log rows are (cluster_a, cluster_b, cost) with cluster ids in the
    usual dendrogram convention: points are 0..N-1 and the t-th merge creates
    cluster N+t; costs are non-decreasing.
    """

    labels: np.ndarray
    merge_log: list[tuple[int, int, float]]

    @property
    def num_clusters(self) -> int:
        return int(self.labels.max()) + 1


def _nn_chain_merges(points: np.ndarray) -> list[tuple[int, int, float]]:
    """All N-1 Ward merges as (slot_i, slot_j, cost) in chain discovery order."""
    n = points.shape[0]
    d2 = _sq_dist_to_all(points) / 2.0
    np.fill_diagonal(d2, np.inf)
    size = np.ones(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    merges: list[tuple[int, int, float]] = []
    chain: list[int] = []

    while len(merges) < n - 1:
        if not chain:
            chain.append(int(np.flatnonzero(active)[0]))
        top = chain[-1]
        row = np.where(active, d2[top], np.inf)
        row[top] = np.inf
        nn = int(np.argmin(row))
        dist = row[nn]
        if len(chain) >= 2 and d2[top, chain[-2]] <= dist:
            prev = chain.pop(-2)
            chain.pop()
            merges.append((min(prev, top), max(prev, top), float(d2[top, prev])))
            _lw_update(d2, size, active, min(prev, top), max(prev, top))
        else:
            chain.append(nn)
    return merges


def _sq_dist_to_all(points: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", points, points)
    d2 = sq[:, None] + sq[None, :] - 2.0 * points @ points.T
    return np.maximum(d2, 0.0)


def _lw_update(d2: np.ndarray, size: np.ndarray, active: np.ndarray, keep: int, drop: int) -> None:
    """Merge cluster slots keep+drop into keep with the Ward recurrence."""
    na, nb = size[keep], size[drop]
    dab = d2[keep, drop]
    others = np.flatnonzero(active)
    others = others[(others != keep) & (others != drop)]
    ne = size[others]
    merged = ((na + ne) * d2[keep, others] + (nb + ne) * d2[drop, others] - ne * dab) / (na + nb + ne)
    d2[keep, others] = merged
    d2[others, keep] = merged
    d2[keep, keep] = np.inf
    active[drop] = False
    size[keep] = na + nb


def ward_hac(points: np.ndarray, c: int) -> HacResult:
    """Agglomerate N rows down to c clusters under Ward's criterion.

    Labels are contiguous, numbered by first occurrence; ties between equal
    merge costs resolve toward the earlier-discovered, smaller-index pair.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 1:
        raise ValueError("points must be a non-empty 2-D matrix")
    n = points.shape[0]
    if not 1 <= c <= n:
        raise ValueError(f"target cluster count {c} must lie in [1, {n}]")
    if c == n:
        return HacResult(np.arange(n, dtype=np.int64), [])

    merges = _nn_chain_merges(points)
    costs = np.array([m[2] for m in merges])
    order = np.argsort(costs, kind="stable")

    uf = UnionFind(n)
    cluster_id = np.arange(n, dtype=np.int64)
    merge_log: list[tuple[int, int, float]] = []
    for t, idx in enumerate(order[: n - c]):
        i, j, cost = merges[idx]
        a = int(cluster_id[uf.find(i)])
        b = int(cluster_id[uf.find(j)])
        merge_log.append((min(a, b), max(a, b), cost))
        uf.union(i, j)
        cluster_id[uf.find(i)] = n + t

    roots = np.fromiter((uf.find(i) for i in range(n)), dtype=np.int64, count=n)
    return HacResult(relabel_contiguous(roots), merge_log)
