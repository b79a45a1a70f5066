import io

import numpy as np
import pytest

from ccl.data import CooccurrenceSet
from ccl.finch import cluster_means
from ccl.mining import (
    MiningConfig,
    apply_video_correction,
    mine_epoch,
    rank_clusters,
    write_pairs_csv,
)


def six_cluster_instance(seed=0, size=6):
    """Six well-separated clusters of `size` points each in 8-D."""
    rng = np.random.default_rng(seed)
    centers, _ = np.linalg.qr(rng.normal(size=(8, 6)))
    centers = centers.T
    points = np.concatenate([c + 0.02 * rng.normal(size=(size, 8)) for c in centers])
    points /= np.linalg.norm(points, axis=1)[:, None]
    labels = np.repeat(np.arange(6), size)
    return points, labels


def test_rank_clusters_two():
    means = np.array([[1.0, 0.0], [0.0, 1.0]])
    ranks = rank_clusters(means, z_near=25, z_far=25)
    assert ranks.nearest[0].tolist() == [1] and ranks.farthest[0].tolist() == [1]
    assert ranks.nearest[1].tolist() == [0] and ranks.farthest[1].tolist() == [0]


def test_rank_clusters_collinear_middle():
    angles = np.array([0.0, 0.3, 1.2])
    means = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    ranks = rank_clusters(means, z_near=1, z_far=1)
    assert ranks.farthest[1].tolist() == [2]  # endpoint of the arc
    assert ranks.nearest[1].tolist() == [0]


def test_rank_clusters_matches_sort_oracle():
    rng = np.random.default_rng(13)
    means = rng.normal(size=(50, 6))
    unit = means / np.linalg.norm(means, axis=1)[:, None]
    ranks = rank_clusters(means, z_near=10, z_far=10)
    for c in range(50):
        dist = [(float(np.linalg.norm(unit[c] - unit[j])), j) for j in range(50) if j != c]
        by_near = [j for _, j in sorted(dist, key=lambda t: (t[0], t[1]))]
        by_far = [j for _, j in sorted(dist, key=lambda t: (-t[0], t[1]))]
        assert ranks.nearest[c].tolist() == by_near[:10]
        assert ranks.farthest[c].tolist() == by_far[:10]


def test_correction_identity_without_violations():
    points, labels = six_cluster_instance()
    cooc = CooccurrenceSet(frozenset({(0, 6)}))  # endpoints in different clusters
    np.testing.assert_array_equal(apply_video_correction(labels, cooc, points), labels)


def test_correction_moves_farther_endpoint():
    # cluster {0,1,2}: rows 0 and 2 co-occur, row 0 sits nearer the mean
    points = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [5.0, 5.0]])
    labels = np.array([0, 0, 0, 1])
    cooc = CooccurrenceSet(frozenset({(0, 2)}))
    corrected = apply_video_correction(labels, cooc, points)
    np.testing.assert_array_equal(corrected, [0, 0, 2, 1])


def test_correction_clears_all_violations():
    rng = np.random.default_rng(3)
    points = rng.normal(size=(40, 4))
    labels = rng.integers(0, 4, 40)
    labels[:4] = np.arange(4)  # keep contiguous
    pairs = set()
    while len(pairs) < 25:
        i, j = rng.choice(40, size=2, replace=False)
        pairs.add((min(i, j), max(i, j)))
    cooc = CooccurrenceSet(frozenset(pairs))
    corrected = apply_video_correction(labels, cooc, points)
    for i, j in pairs:
        assert corrected[i] != corrected[j]
    # contiguous output
    assert np.array_equal(np.unique(corrected), np.arange(corrected.max() + 1))


def default_mining_setup(cooc_pairs=(), **cfg_kwargs):
    points, labels = six_cluster_instance()
    means = cluster_means(points, labels)
    cfg = MiningConfig(seed=5, **cfg_kwargs)
    ranks = rank_clusters(means, cfg.z_near, cfg.z_far)
    cooc = CooccurrenceSet(frozenset(cooc_pairs))
    return points, labels, ranks, cooc, cfg


def test_batches_have_contracted_shape():
    _, labels, ranks, cooc, cfg = default_mining_setup()
    batches = mine_epoch(labels, ranks, cooc, cfg)
    assert len(batches) == 2  # 6 clusters, 5 per batch, wrapped remainder
    for batch in batches:
        assert len(batch) == 250
        assert batch.num_positive == 125
        assert np.all(batch.a != batch.b)


def test_singleton_cluster_positives_come_from_near_clusters():
    points, labels = six_cluster_instance(size=1)
    means = cluster_means(points, labels)
    cfg = MiningConfig(seed=2)
    ranks = rank_clusters(means, cfg.z_near, cfg.z_far)
    batches = mine_epoch(labels, ranks, CooccurrenceSet(), cfg)
    positives = np.concatenate([b.source[b.y == 0] for b in batches])
    assert positives.size
    assert set(positives.tolist()) == {"PosC-near"}


def test_pair_sources_audit():
    _, labels, ranks, cooc, cfg = default_mining_setup(cooc_pairs=[(0, 7), (1, 13)])
    for epoch in range(3):
        for batch in mine_epoch(labels, ranks, cooc, cfg, epoch=epoch):
            for a, b, y, source in batch.as_tuples():
                if source == "PosC":
                    assert y == 0 and labels[a] == labels[b]
                elif source == "PosC-near":
                    assert y == 0 and labels[a] != labels[b]
                    assert (min(a, b), max(a, b)) not in cooc.pairs
                elif source == "NegC":
                    assert y == 1
                    assert labels[b] in ranks.farthest[labels[a]]
                else:
                    assert source == "NVid" and y == 1
                    assert (min(a, b), max(a, b)) in cooc.pairs


def test_mining_deterministic():
    _, labels, ranks, cooc, cfg = default_mining_setup(cooc_pairs=[(0, 7)])
    streams = []
    for _ in range(2):
        buf = io.StringIO()
        batches = mine_epoch(labels, ranks, cooc, cfg, epoch=1)
        for batch in batches:
            for row in batch.as_tuples():
                buf.write(repr(row))
        streams.append(buf.getvalue())
    assert streams[0] == streams[1]


def test_single_cluster_partition_rejected():
    _, labels, ranks, cooc, cfg = default_mining_setup()
    with pytest.raises(ValueError, match="at least 2 clusters"):
        mine_epoch(np.zeros(10, dtype=np.int64), ranks, cooc, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        MiningConfig(pos_per_cluster=10, neg_per_cluster=25).validate()
    with pytest.raises(ValueError):
        MiningConfig(use_pos_cluster=False, use_neg_cluster=False,
                     use_neg_video=False).validate()
    MiningConfig().validate()


def test_pairs_csv_round_trip(tmp_path):
    _, labels, ranks, cooc, cfg = default_mining_setup()
    batches = mine_epoch(labels, ranks, cooc, cfg)
    path = tmp_path / "pairs.csv"
    write_pairs_csv(batches, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "a,b,y,source"
    assert len(lines) == 1 + sum(len(b) for b in batches)
