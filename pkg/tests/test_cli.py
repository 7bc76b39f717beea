import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from ltc_emotion.cli import main
from ltc_emotion.features.dataset import load_dataset
from ltc_emotion.nn.checkpoint import load_model

SMALL_CONFIG = """\
model.seed = 1
train.epochs = 25
train.warmup_epochs = 2
train.patience = 25
train.batch_size = 8
"""


def tree_digest(path):
    h = hashlib.sha256()
    for f in sorted(Path(path).rglob("*")):
        if f.is_file():
            h.update(f.relative_to(path).as_posix().encode())
            h.update(f.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "small.cfg").write_text(SMALL_CONFIG)
    assert main(["synth", "--out", str(root / "ds"), "--per-class", "10", "--noise", "0",
                 "--seed", "3", "--raw-out", str(root / "raw")]) == 0
    digest = tree_digest(root / "ds")
    assert main(["train", "--data", str(root / "ds"), "--out", str(root / "run"), "--seed", "1",
                 "--config", str(root / "small.cfg")]) == 0
    assert tree_digest(root / "ds") == digest  # inputs are never modified
    return root


def run_eval(work, split, out):
    assert main(["eval", "--data", str(work / "ds"), "--checkpoint",
                 str(work / "run" / "model.ckpt"), "--split", split, "--out", str(out)]) == 0
    return json.loads((out / f"metrics_{split}.json").read_text())


class TestSynth:
    def test_counts_and_manifest(self, work):
        ds = load_dataset(work / "ds")
        assert len(ds) == 70 and list(ds.class_counts) == [10] * 7
        ds.check_invariants()

    def test_prints_class_counts(self, tmp_path, capsys):
        assert main(["synth", "--out", str(tmp_path / "a"), "--per-class", "10",
                     "--seed", "3"]) == 0
        assert "70 samples (angry=10" in capsys.readouterr().out

    def test_same_seed_is_byte_identical(self, work, tmp_path):
        assert main(["synth", "--out", str(tmp_path / "again"), "--per-class", "10",
                     "--noise", "0", "--seed", "3"]) == 0
        assert tree_digest(tmp_path / "again") == tree_digest(work / "ds")

    def test_seed_is_required(self, tmp_path):
        assert main(["synth", "--out", str(tmp_path / "x")]) == 1


class TestPreprocess:
    def test_raw_round_trip(self, work, tmp_path):
        out = tmp_path / "pre"
        assert main(["preprocess", "--raw", str(work / "raw"), "--out", str(out),
                     "--seed", "3"]) == 0
        ds = load_dataset(out)
        ds.check_invariants()
        assert len(ds) == 70
        report = json.loads((out / "drop_report.json").read_text())
        assert report["kept"] == 70 and not report["dropped"]
        for c in range(7):
            n_train = np.sum(ds.labels[ds.indices("train")] == c)
            assert abs(n_train - 8) <= 1

    def test_malformed_files_are_listed(self, tmp_path, capsys):
        raw = tmp_path / "raw"
        raw.mkdir()
        (raw / "bad_one.npz").write_bytes(b"not an archive")
        (raw / "bad_two.npz").write_bytes(b"")
        assert main(["preprocess", "--raw", str(raw), "--out", str(tmp_path / "o")]) == 2
        err = capsys.readouterr().err
        assert "bad_one.npz" in err and "bad_two.npz" in err

    def test_empty_directory(self, tmp_path):
        assert main(["preprocess", "--raw", str(tmp_path), "--out", str(tmp_path / "o")]) == 2


class TestTrain:
    def test_artifacts(self, work):
        names = {p.name for p in (work / "run").iterdir()}
        assert {"model.ckpt", "history.csv", "metrics.json", "config.txt"} <= names
        lines = (work / "run" / "history.csv").read_text().splitlines()
        assert lines[0].startswith("epoch,lr,train_loss") and len(lines) == 26

    def test_raw_eeg_only_model(self, work, tmp_path):
        out = tmp_path / "a5"
        assert main(["train", "--data", str(work / "ds"), "--out", str(out), "--seed", "1",
                     "--config", str(work / "small.cfg"), "--modalities", "raw_eeg",
                     "--epochs", "2", "--warmup-epochs", "1", "--patience", "2"]) == 0
        model, _ = load_model(out / "model.ckpt")
        assert model.cfg.fused_dim == 128

    def test_bad_config_fails_before_training(self, work, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("train.lr = -1\n")
        out = tmp_path / "never"
        assert main(["train", "--data", str(work / "ds"), "--out", str(out), "--seed", "1",
                     "--config", str(cfg)]) == 1
        assert not out.exists()

    def test_unknown_key_and_missing_seed(self, work, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("train.learning_rate = 0.1\n")
        assert main(["train", "--data", str(work / "ds"), "--out", str(tmp_path / "o"),
                     "--seed", "1", "--config", str(cfg)]) == 1
        assert main(["train", "--data", str(work / "ds"), "--out", str(tmp_path / "o")]) == 1


class TestEval:
    def test_report_fields(self, work, tmp_path):
        report = run_eval(work, "test", tmp_path)
        assert np.array(report["confusion_matrix"]).shape == (7, 7)
        for key in ("accuracy", "balanced_accuracy", "macro_f1", "weighted_f1", "cohens_kappa",
                    "mcc", "log_loss", "roc_macro_auc", "roc_micro_auc", "per_class"):
            assert key in report
        counts = [row["count"] for row in report["top_misclassifications"]]
        assert counts == sorted(counts, reverse=True)

    def test_train_split_is_optimistic(self, work, tmp_path):
        train = run_eval(work, "train", tmp_path)
        test = run_eval(work, "test", tmp_path)
        assert train["accuracy"] >= test["accuracy"]

    def test_config_mismatch_is_a_shape_error(self, work, tmp_path, capsys):
        cfg = tmp_path / "wide.cfg"
        cfg.write_text("model.lnn_hidden = 64\n")
        assert main(["eval", "--data", str(work / "ds"), "--checkpoint",
                     str(work / "run" / "model.ckpt"), "--config", str(cfg),
                     "--out", str(tmp_path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_report_dir_from_environment(self, work, tmp_path, monkeypatch):
        monkeypatch.setenv("LTC_EMOTION_REPORT_DIR", str(tmp_path / "env"))
        assert main(["eval", "--data", str(work / "ds"), "--checkpoint",
                     str(work / "run" / "model.ckpt")]) == 0
        assert (tmp_path / "env" / "metrics_test.json").exists()


@pytest.fixture(scope="module")
def reports(work):
    out = work / "reports"
    assert main(["analyze", "all", "--data", str(work / "ds"), "--checkpoint",
                 str(work / "run" / "model.ckpt"), "--out", str(out), "--n-boot", "500"]) == 0
    return out


class TestAnalyze:
    def test_all_writes_five_reports(self, reports):
        names = {p.name for p in reports.iterdir()}
        assert names == {"attention.csv", "dynamics.json", "calibration.json",
                         "bootstrap.json", "separability.json"}

    def test_dynamics_lists_every_neuron(self, reports):
        layers = json.loads((reports / "dynamics.json").read_text())["layers"]
        assert len(layers) == 1 and len(layers[0]["neurons"]) == 128
        assert sum(r["count"] for r in layers[0]["roles"]) == 128

    def test_bootstrap_brackets_eval_accuracy(self, work, reports, tmp_path):
        boot = json.loads((reports / "bootstrap.json").read_text())
        acc = run_eval(work, "test", tmp_path)["accuracy"]
        assert boot["accuracy"] == acc and boot["lo"] <= acc <= boot["hi"]

    def test_attention_csv_covers_classes_and_steps(self, reports):
        lines = (reports / "attention.csv").read_text().splitlines()
        assert len(lines) == 1 + 7 * 32

    def test_missing_checkpoint(self, work, tmp_path):
        assert main(["analyze", "bootstrap", "--data", str(work / "ds"), "--checkpoint",
                     str(tmp_path / "none.ckpt"), "--out", str(tmp_path)]) == 2


class TestUsage:
    @pytest.mark.parametrize("command", ["synth", "preprocess", "train", "eval", "analyze"])
    def test_help(self, command, capsys):
        assert main([command, "--help"]) == 0
        assert "--" in capsys.readouterr().out

    def test_train_help_shows_defaults(self, capsys):
        main(["train", "--help"])
        out = " ".join(capsys.readouterr().out.split())
        for text in ("default 0.0005", "default 0.01", "default 1.0", "default 0.1",
                     "default 25", "default 64"):
            assert text in out

    def test_unknown_command(self):
        assert main(["frobnicate"]) == 1
