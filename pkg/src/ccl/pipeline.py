"""End-to-end orchestration: features in, refined clustering report out.

Stages: load -> normalize -> cluster (first-neighbor hierarchy or minibatch
k-means at the same cluster count) -> select partition -> video correction ->
mine pairs -> train -> embed -> optional track aggregation -> Ward HAC at C
-> metrics. Every stage's artifact lands in the output directory and the
report echoes the fully resolved configuration for provenance.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import (
    CooccurrenceSet,
    FeatureSet,
    aggregate_tracks,
    build_cooccurrence,
    l2_normalize,
    load_features,
    load_features_csv,
)
from .finch import cluster_means, finch_hierarchy, partition_purity
from .hac import ward_hac
from .kmeans import KMeansConfig, minibatch_kmeans
from .metrics import ClusteringReport, evaluate_clustering
from .mining import MiningConfig, apply_video_correction, mine_epoch, rank_clusters, write_pairs_csv
from .siamese import TrainConfig, embed, save_model, train

log = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    """Stage failure; the message names the failing stage."""


@dataclass(frozen=True)
class PipelineConfig:
    features: str = ""
    out_dir: str = ""
    partition_index: int = 2
    num_clusters: int = 0          # 0: use the class count from the labels
    eval_level: str = "track"      # "track" or "frame"
    backend: str = "finch"         # "finch" or "kmeans"
    seed: int = 0
    use_pos_cluster: bool = True
    use_neg_cluster: bool = True
    use_neg_video: bool = True
    video_correction: bool = True
    mining: MiningConfig = field(default_factory=MiningConfig)
    training: TrainConfig = field(default_factory=TrainConfig)

    def validate(self) -> None:
        if self.partition_index < 1:
            raise ValueError("partition_index must be >= 1")
        if self.eval_level not in ("track", "frame"):
            raise ValueError(f"eval_level must be 'track' or 'frame', got {self.eval_level!r}")
        if self.backend not in ("finch", "kmeans"):
            raise ValueError(f"backend must be 'finch' or 'kmeans', got {self.backend!r}")
        if not (self.use_pos_cluster or self.use_neg_cluster or self.use_neg_video):
            raise ValueError("every pair source is disabled; nothing to train on")
        if not (self.use_neg_cluster or self.use_neg_video):
            log.warning("no negative pair source enabled; training may collapse embeddings")

    def resolved_mining(self) -> MiningConfig:
        return replace(self.mining, seed=self.seed,
                       use_pos_cluster=self.use_pos_cluster,
                       use_neg_cluster=self.use_neg_cluster,
                       use_neg_video=self.use_neg_video)

    def resolved_training(self) -> TrainConfig:
        return replace(self.training, seed=self.seed)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["mining"] = asdict(self.resolved_mining())
        out["training"] = asdict(self.resolved_training())
        return out


# -- flat key-value config files ----------------------------------------

_SECTIONS = {
    "pipeline": ("partition_index", "num_clusters", "eval_level", "backend", "seed",
                 "features", "out_dir", "video_correction"),
    "sources": ("pos_cluster", "neg_cluster", "neg_video"),
    "mining": ("z_near", "z_far", "small_cluster_threshold", "clusters_per_batch",
               "pos_per_cluster", "neg_per_cluster", "near_positives_for_all"),
    "train": ("epochs", "lr", "lr_drop_epoch", "lr_drop_factor", "beta1", "beta2",
              "adam_eps", "hidden_dim", "out_dim", "margin", "squared_hinge"),
}


def _parse_value(raw: str):
    lowered = raw.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            continue
    return raw


def parse_config_file(path) -> dict[str, object]:
    """Flat ``section.key = value`` lines; '#' starts a comment."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'section.key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        section, _, name = key.partition(".")
        if section not in _SECTIONS or name not in _SECTIONS[section]:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _parse_value(raw)
    return values


def config_from_values(values: dict[str, object],
                       base: PipelineConfig | None = None) -> PipelineConfig:
    """Apply flat dotted keys on top of a base config (defaults if omitted)."""
    cfg = base or PipelineConfig()
    source_map = {"pos_cluster": "use_pos_cluster", "neg_cluster": "use_neg_cluster",
                  "neg_video": "use_neg_video"}
    pipeline_updates: dict[str, object] = {}
    mining_updates: dict[str, object] = {}
    train_updates: dict[str, object] = {}
    for key, value in values.items():
        section, _, name = key.partition(".")
        if section == "pipeline":
            pipeline_updates[name] = value
        elif section == "sources":
            pipeline_updates[source_map[name]] = value
        elif section == "mining":
            mining_updates[name] = value
        elif section == "train":
            train_updates[name] = value
        else:
            raise ValueError(f"unknown config key {key!r}")
    if mining_updates:
        pipeline_updates["mining"] = replace(cfg.mining, **mining_updates)
    if train_updates:
        pipeline_updates["training"] = replace(cfg.training, **train_updates)
    return replace(cfg, **pipeline_updates)


# -- stage artifacts -----------------------------------------------------


def write_partition_csv(hierarchy, path) -> None:
    """CSV sample_index,p1..pL plus a JSON sidecar with cluster counts."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_index"] + [f"p{l + 1}" for l in range(hierarchy.num_partitions)])
        stacked = np.stack(hierarchy.partitions, axis=1)
        for i, row in enumerate(stacked.tolist()):
            writer.writerow([i] + row)
    sidecar = {"cluster_counts": hierarchy.cluster_counts,
               "num_partitions": hierarchy.num_partitions}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def read_partition_csv(path, index: int) -> np.ndarray:
    """Load one 1-based partition column from a partition CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        depth = len(header) - 1
        if not 1 <= index <= depth:
            raise ValueError(f"partition index {index} out of range: file has L={depth}")
        labels = [int(row[index]) for row in reader]
    return np.asarray(labels, dtype=np.int64)


def write_labels_csv(ids, labels, path, id_column: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([id_column, "label"])
        for unit, lab in zip(np.asarray(ids).tolist(), np.asarray(labels).tolist()):
            writer.writerow([unit, lab])


def read_labels_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return np.asarray([int(row[1]) for row in reader], dtype=np.int64)


def read_cooc_csv(path) -> CooccurrenceSet:
    pairs = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            i, j = int(row[0]), int(row[1])
            pairs.add((min(i, j), max(i, j)))
    return CooccurrenceSet(frozenset(pairs))


def load_any_features(path) -> FeatureSet:
    path = Path(path)
    return load_features_csv(path) if path.suffix == ".csv" else load_features(path)


# -- pipeline ------------------------------------------------------------


class _StageTimer:
    def __init__(self):
        self.timings: dict[str, float] = {}

    def run(self, name: str, func):
        start = time.perf_counter()
        try:
            result = func()
        except Exception as exc:
            raise PipelineError(f"stage '{name}' failed: {exc}") from exc
        self.timings[name] = time.perf_counter() - start
        return result


def _eval_points(embedded: FeatureSet, level: str):
    """Points to cluster plus ground truth and unit ids at the chosen level."""
    if level == "track":
        tracks = aggregate_tracks(embedded)
        gt = tracks.label if np.all(tracks.label >= 0) else None
        return tracks.features, gt, tracks.track_id, "track_id"
    gt = embedded.label if embedded.label is not None and np.all(embedded.label >= 0) else None
    return embedded.features, gt, np.arange(embedded.num_samples), "sample_index"


def _partition_stats(hierarchy, selected_index, partition, gt) -> dict:
    sizes = np.bincount(partition)
    stats = {
        "cluster_counts": hierarchy.cluster_counts,
        "selected_index": selected_index,
        "selected_num_clusters": int(partition.max()) + 1,
        "largest_cluster": int(sizes.max()),
        "smallest_cluster": int(sizes.min()),
    }
    if gt is not None:
        purity = partition_purity(partition, gt)
        correct = int(round(purity * partition.size))
        stats.update({"purity": purity, "correct_samples": correct,
                      "incorrect_samples": int(partition.size) - correct})
    return stats


def run_baseline(fs: FeatureSet, num_clusters: int, level: str = "track") -> ClusteringReport:
    """HAC on the unrefined normalized features."""
    normalized = l2_normalize(fs)
    points, gt, _, _ = _eval_points(normalized, level)
    result = ward_hac(points, num_clusters)
    if gt is None:
        raise ValueError("baseline evaluation needs ground-truth labels")
    return evaluate_clustering(result.labels, gt)


def run_pipeline(cfg: PipelineConfig, fs: FeatureSet | None = None) -> dict:
    """Execute the full refinement pipeline; returns the report dict.

    When cfg.out_dir is set, stage artifacts (partition file, pair audit,
    model checkpoint, predicted labels, report.json) are written there.
    """
    cfg.validate()
    timer = _StageTimer()
    out_dir = Path(cfg.out_dir) if cfg.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    if fs is None:
        fs = timer.run("load", lambda: load_any_features(cfg.features))
    normalized = timer.run("normalize", lambda: l2_normalize(fs))
    cooc = timer.run("cooccurrence", lambda: (
        build_cooccurrence(normalized) if normalized.frame_id is not None else CooccurrenceSet()))

    hierarchy = timer.run("finch", lambda: finch_hierarchy(normalized))
    partition = timer.run("select_partition", lambda: hierarchy.partition(cfg.partition_index))
    if cfg.backend == "kmeans":
        k = hierarchy.cluster_counts[cfg.partition_index - 1]
        partition = timer.run("kmeans", lambda: minibatch_kmeans(
            normalized.features, KMeansConfig(k=k, seed=cfg.seed)))
    gt_frame = normalized.label if normalized.label is not None and np.all(normalized.label >= 0) else None
    stats = _partition_stats(hierarchy, cfg.partition_index, partition, gt_frame)

    if cfg.video_correction and len(cooc):
        partition = timer.run("video_correction", lambda: apply_video_correction(
            partition, cooc, normalized.features))
    stats["mining_num_clusters"] = int(partition.max()) + 1

    mining_cfg = cfg.resolved_mining()
    ranks = timer.run("rank_clusters", lambda: rank_clusters(
        cluster_means(normalized.features, partition), mining_cfg.z_near, mining_cfg.z_far))
    factory = lambda epoch: mine_epoch(partition, ranks, cooc, mining_cfg, epoch)

    train_cfg = cfg.resolved_training()
    epoch_losses: list[float] = []
    model = timer.run("train", lambda: train(normalized, factory, train_cfg,
                                             loss_log=epoch_losses))
    embedded = timer.run("embed", lambda: embed(model, normalized))

    num_clusters = cfg.num_clusters or fs.num_classes
    if num_clusters < 1:
        raise PipelineError("stage 'cluster' failed: no cluster count configured "
                            "and the features carry no labels")
    points, gt, unit_ids, id_column = timer.run(
        "aggregate", lambda: _eval_points(embedded, cfg.eval_level))
    hac_result = timer.run("hac", lambda: ward_hac(points, num_clusters))

    report: dict = {
        "config": cfg.to_dict(),
        "partition_stats": stats,
        "train_epoch_losses": epoch_losses,
        "num_clusters": num_clusters,
    }
    if gt is not None:
        ccl_metrics = timer.run("evaluate", lambda: evaluate_clustering(hac_result.labels, gt))
        baseline = timer.run("baseline", lambda: run_baseline(fs, num_clusters, cfg.eval_level))
        report["ccl"] = ccl_metrics.to_dict()
        report["baseline"] = baseline.to_dict()
    report["timings"] = timer.timings

    if out_dir is not None:
        write_partition_csv(hierarchy, out_dir / "partitions.csv")
        write_pairs_csv(factory(0), out_dir / "pairs_epoch0.csv")
        save_model(model, out_dir / "model.ccl")
        write_labels_csv(unit_ids, hac_result.labels, out_dir / "labels.csv", id_column)
        (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


ABLATION_ROWS = [
    ("PosC", (True, False, False)),
    ("NegC", (False, True, False)),
    ("PosC+NVid", (True, False, True)),
    ("PosC+NegC", (True, True, False)),
    ("NegC+NVid", (False, True, True)),
    ("PosC+NegC+NVid", (True, True, True)),
]


def run_ablation(cfg: PipelineConfig, fs: FeatureSet | None = None) -> dict:
    """Baseline plus the six pair-source combinations, one report each."""
    if fs is None:
        fs = load_any_features(cfg.features)
    num_clusters = cfg.num_clusters or fs.num_classes
    summary: dict = {"rows": []}
    baseline = run_baseline(fs, num_clusters, cfg.eval_level)
    summary["rows"].append({"name": "Base", "sources": {}, "acc": baseline.acc})

    out_root = Path(cfg.out_dir) if cfg.out_dir else None
    for name, (pos_c, neg_c, n_vid) in ABLATION_ROWS:
        row_cfg = replace(
            cfg,
            use_pos_cluster=pos_c,
            use_neg_cluster=neg_c,
            use_neg_video=n_vid,
            video_correction=n_vid,
            out_dir=str(out_root / name.replace("+", "_")) if out_root else "",
        )
        report = run_pipeline(row_cfg, fs)
        summary["rows"].append({
            "name": name,
            "sources": {"PosC": pos_c, "NegC": neg_c, "NVid": n_vid},
            "acc": report["ccl"]["acc"],
        })
    if out_root is not None:
        out_root.mkdir(parents=True, exist_ok=True)
        (out_root / "ablation.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary
