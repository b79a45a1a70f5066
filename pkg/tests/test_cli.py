import json

import numpy as np
import pytest

from ccl.cli import main
from ccl.data import load_features
from ccl.pipeline import read_labels_csv


@pytest.fixture(scope="module")
def feature_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synth.cclf"
    main(["synth", "--classes", "3", "--per-class", "50", "--dim", "12",
          "--noise", "0.15", "--frames-per-track", "5", "--cooc-rate", "0.3",
          "--seed", "1", "--out", str(path)])
    return path


def test_synth_writes_loadable_features(feature_file):
    fs = load_features(feature_file)
    assert fs.num_samples == 150 and fs.dim == 12
    assert fs.num_classes == 3


def test_finch_subcommand(feature_file, tmp_path):
    out = tmp_path / "partitions.csv"
    main(["finch", "--features", str(feature_file), "--out", str(out)])
    assert out.exists()
    sidecar = json.loads((tmp_path / "partitions.csv.json").read_text())
    assert sidecar["cluster_counts"][0] > sidecar["cluster_counts"][-1]


def test_kmeans_subcommand(feature_file, tmp_path):
    out = tmp_path / "kmeans.csv"
    main(["kmeans", "--features", str(feature_file), "--k", "3",
          "--seed", "0", "--out", str(out)])
    labels = read_labels_csv(out)
    assert labels.size == 150
    assert labels.max() <= 2


def test_mine_subcommand(feature_file, tmp_path):
    out = tmp_path / "pairs.csv"
    main(["mine", "--features", str(feature_file), "--seed", "3", "--out", str(out)])
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "a,b,y,source"
    rows = [line.split(",") for line in lines[1:]]
    assert all(r[2] in ("0", "1") for r in rows)
    assert all(r[3] in ("PosC", "PosC-near", "NegC", "NVid") for r in rows)


def test_train_embed_cluster_evaluate_chain(feature_file, tmp_path):
    model = tmp_path / "model.ccl"
    config = tmp_path / "train.cfg"
    config.write_text("train.epochs = 2\ntrain.lr = 1e-3\ntrain.hidden_dim = 16\n"
                      "mining.z_near = 5\nmining.z_far = 5\n")
    main(["train", "--features", str(feature_file), "--config", str(config),
          "--seed", "0", "--out", str(model)])
    assert model.exists()

    embeddings = tmp_path / "embedded.cclf"
    main(["embed", "--model", str(model), "--features", str(feature_file),
          "--out", str(embeddings)])
    emb = load_features(embeddings)
    assert emb.dim == 16

    labels = tmp_path / "labels.csv"
    main(["cluster", "--embeddings", str(embeddings), "--num-clusters", "3",
          "--level", "frame", "--out", str(labels)])
    assert read_labels_csv(labels).size == 150

    report_path = tmp_path / "report.json"
    main(["evaluate", "--pred", str(labels), "--gt", str(feature_file),
          "--metrics", "wcp,bcubed", "--out", str(report_path)])
    report = json.loads(report_path.read_text())
    assert 0.0 <= report["wcp"]["acc"] <= 1.0
    assert 0.0 <= report["bcubed"]["f"] <= 1.0


def test_cluster_track_level(feature_file, tmp_path):
    labels = tmp_path / "track_labels.csv"
    main(["cluster", "--features", str(feature_file), "--num-clusters", "3",
          "--level", "track", "--out", str(labels)])
    assert read_labels_csv(labels).size == 30  # 150 rows / 5 frames per track

    report_path = tmp_path / "track_report.json"
    main(["evaluate", "--pred", str(labels), "--gt", str(feature_file),
          "--out", str(report_path)])
    assert "wcp" in json.loads(report_path.read_text())


def test_run_subcommand(feature_file, tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("train.epochs = 2\ntrain.lr = 1e-3\ntrain.hidden_dim = 16\n"
                      "mining.z_near = 5\nmining.z_far = 5\n")
    out_dir = tmp_path / "run_out"
    main(["run", "--features", str(feature_file), "--out-dir", str(out_dir),
          "--config", str(config), "--seed", "0", "--num-clusters", "3",
          "--level", "frame"])
    report = json.loads((out_dir / "report.json").read_text())
    assert report["config"]["seed"] == 0
    assert report["config"]["training"]["epochs"] == 2
    assert (out_dir / "labels.csv").exists()


def test_evaluate_rejects_mismatched_prediction(feature_file, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("sample_index,label\n0,0\n1,1\n")
    with pytest.raises(SystemExit, match="matches neither"):
        main(["evaluate", "--pred", str(bad), "--gt", str(feature_file)])
