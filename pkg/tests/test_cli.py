import hashlib
from pathlib import Path

import numpy as np
import pytest

from stampseg import cli, data, net


def _run(*argv):
    return cli.main([str(a) for a in argv])


def _synth(root, **over):
    args = {
        "--videos": 4, "--classes": 3, "--frames": 50, "--dim": 6,
        "--noise": 0.0, "--test-frac": 0.25, "--seed": 0,
    }
    args.update(over)
    flat = [x for kv in args.items() for x in kv]
    assert _run("synth", "--out", root, "--segments", 3, 5, *flat) == 0
    return Path(root)


def _tree_digest(root):
    digest = hashlib.sha256()
    for path in sorted(Path(root).rglob("*")):
        if path.is_file():
            digest.update(str(path.relative_to(root)).encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


TINY_NET = ["--stages", "1", "--layers", "3", "--channels", "8"]


# ---------------------------------------------------------------------------
# synth

def test_synth_layout_and_roundtrip(tmp_path):
    root = _synth(tmp_path / "corpus")
    assert (root / "mapping.txt").exists()
    assert (root / "splits" / "train.bundle").exists()
    assert (root / "splits" / "test.bundle").exists()
    vocab, records = data.load_corpus(root, split="train")
    assert vocab.num_classes == 3
    assert len(records) == 3
    for rec in records:
        assert rec.features.shape[0] == len(rec.labels)
        assert rec.features.shape[1] == 6


def test_synth_deterministic_tree(tmp_path):
    a = _synth(tmp_path / "a", **{"--noise": 0.3})
    b = _synth(tmp_path / "b", **{"--noise": 0.3})
    assert _tree_digest(a) == _tree_digest(b)


def test_synth_rejects_degenerate_settings(tmp_path, capsys):
    assert _run("synth", "--out", tmp_path / "x", "--classes", 1) == 1
    assert "error:" in capsys.readouterr().err
    assert _run("synth", "--out", tmp_path / "y", "--videos", 2, "--test-frac", 0.0) == 1
    assert "empty split" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# annotate

def test_annotate_center_matches_library(tmp_path):
    root = _synth(tmp_path / "corpus")
    assert _run("annotate", "--data", root, "--strategy", "center") == 0
    vocab, records = data.load_corpus(root, split="train")
    for rec in records:
        expected = data.sample_timestamps(rec.labels, "center")
        np.testing.assert_array_equal(rec.timestamps.frames, expected.frames)
        np.testing.assert_array_equal(rec.timestamps.labels, expected.labels)


def test_annotate_fraction_counts(tmp_path):
    root = _synth(tmp_path / "corpus", **{"--frames": 100})
    assert _run("annotate", "--data", root, "--strategy", "fraction:0.1") == 0
    _, records = data.load_corpus(root, split="train")
    for rec in records:
        expected = int(np.ceil(0.1 * len(rec.labels) - 1e-9))
        assert len(rec.timestamps.frames) == expected


def test_annotate_random_deterministic(tmp_path):
    root = _synth(tmp_path / "corpus")
    assert _run("annotate", "--data", root, "--strategy", "random", "--seed", "5") == 0
    first = _tree_digest(Path(root) / "timestamps")
    assert _run("annotate", "--data", root, "--strategy", "random", "--seed", "5") == 0
    assert _tree_digest(Path(root) / "timestamps") == first


# ---------------------------------------------------------------------------
# train / eval

def test_train_full_then_eval_perfect(tmp_path, capsys):
    root = _synth(tmp_path / "corpus")
    model_path = tmp_path / "model.bin"
    log_path = tmp_path / "train.log"
    assert _run(
        "train", "--data", root, "--out", model_path, "--log", log_path,
        "--mode", "full", "--epochs", 30, "--warmup", 0, "--lr", 0.005,
        "--batch", 2, *TINY_NET,
    ) == 0
    capsys.readouterr()
    assert _run("eval", "--data", root, "--split", "train",
                "--model", model_path, "--header") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "acc\tedit\tf1_10\tf1_25\tf1_50"
    assert out[1] == "100.0\t100.0\t100.0\t100.0\t100.0"
    log_lines = log_path.read_text().splitlines()
    assert len(log_lines) == 30
    assert log_lines[0].startswith("1\t")


def test_train_timestamps_mode_runs(tmp_path, capsys):
    root = _synth(tmp_path / "corpus")
    assert _run("annotate", "--data", root, "--strategy", "center") == 0
    model_path = tmp_path / "model.bin"
    assert _run(
        "train", "--data", root, "--out", model_path,
        "--mode", "timestamps", "--epochs", 6, "--warmup", 3,
        "--lr", 0.005, "--batch", 2, *TINY_NET,
    ) == 0
    assert model_path.exists()
    model = net.load_model(model_path)
    assert model.adam.step == 6 * 2  # 3 train videos in batches of 2 -> 2 steps per epoch


def test_train_missing_timestamps_errors(tmp_path, capsys):
    root = _synth(tmp_path / "corpus")
    code = _run("train", "--data", root, "--out", tmp_path / "m.bin",
                "--mode", "timestamps", "--epochs", 2, "--warmup", 1, *TINY_NET)
    assert code == 1
    assert "timestamps" in capsys.readouterr().err


def test_train_save_every_writes_checkpoints(tmp_path, capsys):
    root = _synth(tmp_path / "corpus")
    model_path = tmp_path / "model.bin"
    assert _run(
        "train", "--data", root, "--out", model_path, "--mode", "full",
        "--epochs", 4, "--warmup", 0, "--batch", 2, "--save-every", 2, *TINY_NET,
    ) == 0
    model = net.load_model(model_path)
    assert model.adam.step == 4 * 2


def test_eval_pred_directory(tmp_path, capsys):
    root = _synth(tmp_path / "corpus")
    pred_dir = tmp_path / "preds"
    pred_dir.mkdir()
    vocab, records = data.load_corpus(root, split="test")
    for rec in records:
        data.write_labels(rec.labels, vocab, pred_dir / f"{rec.name}.txt")
    capsys.readouterr()
    assert _run("eval", "--data", root, "--pred", pred_dir) == 0
    assert capsys.readouterr().out.strip() == "100.0\t100.0\t100.0\t100.0\t100.0"


def test_eval_requires_exactly_one_source(tmp_path, capsys):
    root = _synth(tmp_path / "corpus")
    assert _run("eval", "--data", root) == 1
    assert "exactly one" in capsys.readouterr().err
    assert _run("eval", "--data", root, "--model", "a", "--pred", "b") == 1
    assert "exactly one" in capsys.readouterr().err


def test_eval_missing_prediction_file(tmp_path, capsys):
    root = _synth(tmp_path / "corpus")
    pred_dir = tmp_path / "preds"
    pred_dir.mkdir()
    assert _run("eval", "--data", root, "--pred", pred_dir) == 1
    assert "missing prediction" in capsys.readouterr().err


def test_thread_env_validation(tmp_path, capsys, monkeypatch):
    root = _synth(tmp_path / "corpus")
    model_path = tmp_path / "model.bin"
    config = net.ModelConfig(input_dim=6, num_classes=3, num_stages=1,
                             layers_per_stage=2, channels=4)
    net.save_model(net.init_model(config, seed=0), model_path)
    monkeypatch.setenv("STAMPSEG_THREADS", "abc")
    assert _run("eval", "--data", root, "--model", model_path) == 1
    assert "STAMPSEG_THREADS" in capsys.readouterr().err
    monkeypatch.setenv("STAMPSEG_THREADS", "2")
    capsys.readouterr()
    assert _run("eval", "--data", root, "--model", model_path) == 0


# ---------------------------------------------------------------------------
# boundaries

def test_boundaries_writes_labels_and_sidecars(tmp_path, capsys):
    root = _synth(tmp_path / "corpus")
    assert _run("annotate", "--data", root, "--strategy", "center") == 0
    model_path = tmp_path / "model.bin"
    config = net.ModelConfig(input_dim=6, num_classes=3, num_stages=1,
                             layers_per_stage=3, channels=8)
    net.save_model(net.init_model(config, seed=0), model_path)
    out_dir = tmp_path / "pseudo"
    assert _run("boundaries", "--data", root, "--model", model_path,
                "--out", out_dir, "--boundary", "s2s_features") == 0
    vocab, records = data.load_corpus(root, split="train")
    for rec in records:
        labels = data.load_labels(out_dir / f"{rec.name}.txt", vocab)
        assert len(labels) == len(rec.labels)
        np.testing.assert_array_equal(labels[rec.timestamps.frames], rec.timestamps.labels)
        sidecar = (out_dir / f"{rec.name}.bounds").read_text().splitlines()
        segs = data.segments_from_labels(labels)
        assert len(sidecar) == len(segs) - 1
        for i, line in enumerate(sidecar):
            idx, bound = line.split()
            assert int(idx) == i
            assert int(bound) == segs[i][2] - 1


# ---------------------------------------------------------------------------
# error paths

def test_missing_corpus_reports_error(tmp_path, capsys):
    assert _run("eval", "--data", tmp_path / "nothere", "--model", "m.bin") == 1
    assert "error:" in capsys.readouterr().err


def test_console_script_installed():
    import shutil

    assert shutil.which("stampseg") is not None
