"""Training-pair mining from a cluster partition plus frame co-occurrence.

Positive candidates are all pairs inside a cluster (PosC), topped up for
small clusters by pairing members with random samples from one of the
nearest clusters (PosC-near). Negative candidates pair each member twice
with random samples from the farthest clusters (NegC) and add every
co-occurrence pair touching the cluster (NVid). Each cluster contributes a
fixed quota of positives and negatives; pair label y is 0 for positives and
1 for negatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CooccurrenceSet
from .labeling import members_by_label

POS_CLUSTER = "PosC"
POS_NEAR = "PosC-near"
NEG_CLUSTER = "NegC"
NEG_VIDEO = "NVid"


@dataclass(frozen=True)
class MiningConfig:
    z_near: int = 25
    z_far: int = 25
    small_cluster_threshold: int = 10
    clusters_per_batch: int = 5
    pos_per_cluster: int = 25
    neg_per_cluster: int = 25
    seed: int = 0
    # source toggles for the ablation runner
    use_pos_cluster: bool = True
    use_neg_cluster: bool = True
    use_neg_video: bool = True
    # extend near-cluster positives to every cluster, not only small ones
    near_positives_for_all: bool = False

    def validate(self) -> None:
        counts = (self.z_near, self.z_far, self.small_cluster_threshold,
                  self.clusters_per_batch, self.pos_per_cluster, self.neg_per_cluster)
        if any(v < 1 for v in counts):
            raise ValueError("all mining sizes must be positive")
        if self.pos_per_cluster != self.neg_per_cluster:
            raise ValueError("pos_per_cluster and neg_per_cluster must match")
        if not (self.use_pos_cluster or self.use_neg_cluster or self.use_neg_video):
            raise ValueError("at least one pair source must be enabled")


@dataclass(frozen=True)
class PairBatch:
    """Mined index pairs: y == 0 marks positives, y == 1 negatives."""

    a: np.ndarray
    b: np.ndarray
    y: np.ndarray
    source: np.ndarray

    def __len__(self) -> int:
        return self.a.size

    @property
    def num_positive(self) -> int:
        return int(np.sum(self.y == 0))

    def as_tuples(self) -> list[tuple[int, int, int, str]]:
        return list(zip(self.a.tolist(), self.b.tolist(), self.y.tolist(), self.source.tolist()))


@dataclass(frozen=True)
class ClusterRanks:
    """Per cluster: indices of the nearest and the farthest other clusters."""

    nearest: list[np.ndarray]
    farthest: list[np.ndarray]


def rank_clusters(means: np.ndarray, z_near: int = 25, z_far: int = 25) -> ClusterRanks:
    """Sort other clusters by Euclidean distance between normalized means.

    Lists truncate to M-1 entries when fewer than z other clusters exist;
    distance ties resolve toward the smaller cluster index.
    """
    means = np.asarray(means, dtype=np.float64)
    m = means.shape[0]
    if m < 2:
        raise ValueError("ranking needs at least 2 clusters")
    unit = means / np.linalg.norm(means, axis=1)[:, None]
    sq = np.einsum("ij,ij->i", unit, unit)
    dist = np.maximum(sq[:, None] + sq[None, :] - 2.0 * unit @ unit.T, 0.0)
    nearest, farthest = [], []
    idx = np.arange(m)
    for c in range(m):
        others = idx[idx != c]
        row = dist[c, others]
        nearest.append(others[np.lexsort((others, row))][:z_near])
        farthest.append(others[np.lexsort((others, -row))][:z_far])
    return ClusterRanks(nearest, farthest)


def apply_video_correction(partition: np.ndarray, cooc: CooccurrenceSet,
                           points: np.ndarray) -> np.ndarray:
    """Evict one endpoint of every co-occurring pair that shares a cluster.

    The endpoint nearer the current cluster mean stays; the other one starts
    a fresh singleton cluster. Clusters are processed in ascending label
    order and pairs in ascending index order, re-checking after every move,
    so no cluster retains a co-occurring pair.
    """
    labels = np.asarray(partition, dtype=np.int64).copy()
    points = np.asarray(points, dtype=np.float64)
    m = int(labels.max()) + 1
    next_label = m
    for c in range(m):
        while True:
            member_set = set(np.flatnonzero(labels == c).tolist())
            violating = sorted(
                p for p in cooc.pairs if p[0] in member_set and p[1] in member_set)
            if not violating:
                break
            i, j = violating[0]
            mean = points[sorted(member_set)].mean(axis=0)
            di = float(np.linalg.norm(points[i] - mean))
            dj = float(np.linalg.norm(points[j] - mean))
            loser = j if di <= dj else i
            labels[loser] = next_label
            next_label += 1
    return labels


def _subsample(rng: np.random.Generator, candidates: list, quota: int) -> list:
    if not candidates:
        return []
    if len(candidates) >= quota:
        chosen = rng.choice(len(candidates), size=quota, replace=False)
    else:
        chosen = rng.choice(len(candidates), size=quota, replace=True)
    return [candidates[int(i)] for i in chosen]


def _near_positive_draws(rng, mem, members, near, cooc):
    if near.size == 0:
        return []
    g = int(rng.choice(near))
    partner_pool = members[g]
    draws = []
    for a in mem.tolist():
        b = int(rng.choice(partner_pool))
        if (a, b) not in cooc:
            draws.append((a, b, POS_NEAR))
    if draws:
        return draws
    # every draw hit a co-occurrence: fall back to enumerating allowed pairs
    for g in near.tolist():
        for a in mem.tolist():
            for b in members[g].tolist():
                if (a, b) not in cooc:
                    draws.append((a, b, POS_NEAR))
    return draws


def _mine_cluster(rng, c, members, ranks, cooc, cfg):
    mem = members[c]
    positives: list[tuple[int, int, str]] = []
    if cfg.use_pos_cluster:
        n = mem.size
        for i in range(n):
            for j in range(i + 1, n):
                positives.append((int(mem[i]), int(mem[j]), POS_CLUSTER))
        if n < cfg.small_cluster_threshold or cfg.near_positives_for_all:
            positives.extend(_near_positive_draws(rng, mem, members, ranks.nearest[c], cooc))

    negatives: list[tuple[int, int, str]] = []
    if cfg.use_neg_cluster:
        far = ranks.farthest[c]
        if far.size:
            for a in mem.tolist():
                for _ in range(2):
                    g = int(rng.choice(far))
                    negatives.append((a, int(rng.choice(members[g])), NEG_CLUSTER))
    if cfg.use_neg_video:
        negatives.extend((i, j, NEG_VIDEO) for i, j in cooc.touching(mem))

    return (_subsample(rng, positives, cfg.pos_per_cluster),
            _subsample(rng, negatives, cfg.neg_per_cluster))


def _batch_from(pos, neg) -> PairBatch:
    rows = pos + neg
    a = np.array([r[0] for r in rows], dtype=np.int64)
    b = np.array([r[1] for r in rows], dtype=np.int64)
    y = np.array([0] * len(pos) + [1] * len(neg), dtype=np.int64)
    source = np.array([r[2] for r in rows], dtype="U9")
    return PairBatch(a, b, y, source)


def mine_epoch(partition: np.ndarray, ranks: ClusterRanks, cooc: CooccurrenceSet,
               cfg: MiningConfig, epoch: int = 0) -> list[PairBatch]:
    """One epoch of batches: clusters in seeded-shuffled order, a fixed
    number per batch; a short final group wraps around to the start of the
    shuffle so every batch carries the full quota."""
    cfg.validate()
    labels = np.asarray(partition, dtype=np.int64)
    m = int(labels.max()) + 1
    if m < 2:
        raise ValueError("mining needs a partition with at least 2 clusters")
    members = members_by_label(labels)
    rng = np.random.default_rng([cfg.seed, epoch])
    order = rng.permutation(m)
    per_batch = cfg.clusters_per_batch
    num_batches = -(-m // per_batch)
    reps = -(-num_batches * per_batch // m)
    extended = np.tile(order, reps)[: num_batches * per_batch]

    batches = []
    for start in range(0, extended.size, per_batch):
        pos_rows: list = []
        neg_rows: list = []
        for c in extended[start:start + per_batch].tolist():
            pos, neg = _mine_cluster(rng, c, members, ranks, cooc, cfg)
            pos_rows.extend(pos)
            neg_rows.extend(neg)
        batches.append(_batch_from(pos_rows, neg_rows))
    return batches


def write_pairs_csv(batches: list[PairBatch], path) -> None:
    with open(path, "w") as fh:
        fh.write("a,b,y,source\n")
        for batch in batches:
            for a, b, y, source in batch.as_tuples():
                fh.write(f"{a},{b},{y},{source}\n")
