"""Independent brute-force reference implementations used by the tests.

Everything here recomputes from first principles (full adjacency matrices,
breadth-first search, from-scratch variance sums, per-item loops) and shares
no code path with the implementations under test.
"""

from __future__ import annotations

import numpy as np


def unit_rows(points):
    points = np.asarray(points, dtype=np.float64)
    return points / np.linalg.norm(points, axis=1)[:, None]


def brute_first_neighbors(points) -> np.ndarray:
    """Nearest other row by cosine distance, full matrix, ties to low index."""
    unit = unit_rows(points)
    dist = 1.0 - unit @ unit.T
    np.fill_diagonal(dist, np.inf)
    return np.argmin(dist, axis=1)


def adjacency_components(kappa) -> np.ndarray:
    """Labels from the full first-neighbor adjacency matrix via BFS.

    The adjacency includes all three clauses: j == kappa[i], kappa[j] == i,
    and the shared first neighbor kappa[i] == kappa[j].
    """
    kappa = np.asarray(kappa)
    n = kappa.size
    idx = np.arange(n)
    adj = kappa[:, None] == idx[None, :]          # j == kappa[i]
    adj |= adj.T                                  # kappa[j] == i
    adj |= kappa[:, None] == kappa[None, :]       # shared first neighbor
    np.fill_diagonal(adj, False)
    labels = np.full(n, -1, dtype=np.int64)
    next_label = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        queue = [start]
        labels[start] = next_label
        while queue:
            node = queue.pop(0)
            for other in np.flatnonzero(adj[node]):
                if labels[other] < 0:
                    labels[other] = next_label
                    queue.append(other)
        next_label += 1
    return labels


def groupby_means(points, labels) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    m = int(labels.max()) + 1
    means = np.stack([points[labels == c].mean(axis=0) for c in range(m)])
    return means / np.linalg.norm(means, axis=1)[:, None]


def naive_finch(points) -> tuple[list[np.ndarray], list[int]]:
    """Full hierarchy via adjacency matrices and BFS at every level."""
    points = np.asarray(points, dtype=np.float64)
    labels = adjacency_components(brute_first_neighbors(points))
    partitions = [labels]
    counts = [int(labels.max()) + 1]
    while counts[-1] > 2:
        means = groupby_means(points, partitions[-1])
        meta = adjacency_components(brute_first_neighbors(means))
        merged = meta[partitions[-1]]
        m = int(merged.max()) + 1
        if m <= 1 or m >= counts[-1]:
            break
        partitions.append(merged)
        counts.append(m)
    return partitions, counts


def scatter(points) -> float:
    mean = points.mean(axis=0)
    return float(((points - mean) ** 2).sum())


def naive_ward(points, c) -> np.ndarray:
    """Greedy Ward merging, recomputing every pair cost from scratch."""
    points = np.asarray(points, dtype=np.float64)
    clusters = [[i] for i in range(points.shape[0])]
    while len(clusters) > c:
        best = None
        for p in range(len(clusters)):
            for q in range(p + 1, len(clusters)):
                cost = (scatter(points[clusters[p] + clusters[q]])
                        - scatter(points[clusters[p]]) - scatter(points[clusters[q]]))
                if best is None or cost < best[0]:
                    best = (cost, p, q)
        _, p, q = best
        clusters[p] = clusters[p] + clusters[q]
        del clusters[q]
    labels = np.empty(points.shape[0], dtype=np.int64)
    for ci, members in enumerate(clusters):
        labels[members] = ci
    return canonical(labels)


def canonical(labels) -> np.ndarray:
    """Relabel by first occurrence, independently of ccl.labeling."""
    labels = np.asarray(labels)
    seen: dict[int, int] = {}
    out = np.empty(labels.size, dtype=np.int64)
    for i, lab in enumerate(labels.tolist()):
        if lab not in seen:
            seen[lab] = len(seen)
        out[i] = seen[lab]
    return out


def brute_bcubed(pred, gt) -> tuple[float, float, float]:
    """Item-by-item B-Cubed from the set definitions."""
    pred = list(pred)
    gt = list(gt)
    n = len(pred)
    precisions, recalls = [], []
    for i in range(n):
        cluster = [j for j in range(n) if pred[j] == pred[i]]
        klass = [j for j in range(n) if gt[j] == gt[i]]
        overlap = len(set(cluster) & set(klass))
        precisions.append(overlap / len(cluster))
        recalls.append(overlap / len(klass))
    p = sum(precisions) / n
    r = sum(recalls) / n
    f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f


def brute_wcp(pred, gt) -> float:
    pred = list(pred)
    gt = list(gt)
    total = 0
    for c in set(pred):
        member_gt = [gt[i] for i in range(len(pred)) if pred[i] == c]
        total += max(member_gt.count(v) for v in set(member_gt))
    return total / len(pred)
