import json
import os
import shutil
import subprocess
import sys

import numpy as np
import pytest

from rockeeg import cli
from rockeeg.dataset import Dataset
from rockeeg.synthetic import tone_dataset

FAST = ["--set", "n_features=336", "--set", "max_dilations=4"]


def structured(n_per_class, pairs, length=64, seed=0, labels=None):
    """Tone dataset where each trial contributes ``pairs`` samples."""
    base = tone_dataset(n_per_class * pairs, length=length, rate=64, seed=seed,
                        frequencies=(5, 9, 13, 17), snr_db=5)
    n = len(base)
    y = base.y if labels is None else labels
    trial = np.arange(n) // pairs
    return Dataset(base.X, y, np.ones(n, dtype=int), trial, np.arange(n) % pairs, 4)


def save(tmp_path, dataset, name="d.rkeg"):
    path = tmp_path / name
    dataset.save(path)
    return str(path)


def run(*argv):
    return cli.main([str(a) for a in argv])


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestIngest:
    def test_fixture_directory(self, fixture_edf, tmp_path):
        raw = tmp_path / "raw"
        raw.mkdir()
        shutil.copy(fixture_edf, raw / "S001R04.edf")
        out = tmp_path / "out"
        assert run("ingest", "--data-dir", raw, "--out", out) == 0
        d = Dataset.load(out / cli.DATASET_NAME)
        assert len(d) == 63 and len(set(d.trial_keys())) == 7
        log = (out / "ingest.log").read_text()
        assert "epochs=7" in log and "samples=63" in log
        assert (out / cli.CONFIG_ECHO).exists()

    def test_env_default(self, fixture_edf, tmp_path, monkeypatch):
        shutil.copy(fixture_edf, tmp_path / "S001R04.edf")
        monkeypatch.setenv("ROCKEEG_DATA_DIR", str(tmp_path))
        assert run("ingest", "--out", tmp_path / "o", "--pairs", "C3-C4") == 0
        assert len(Dataset.load(tmp_path / "o" / cli.DATASET_NAME)) == 7

    def test_empty_and_missing(self, tmp_path, capsys):
        (tmp_path / "empty").mkdir()
        assert run("ingest", "--data-dir", tmp_path / "empty", "--out", tmp_path / "o") == 2
        assert run("ingest", "--data-dir", tmp_path / "nope", "--out", tmp_path / "o") == 2
        assert "rockeeg ingest:" in capsys.readouterr().err

    def test_strict_malformed(self, fixture_edf, tmp_path):
        shutil.copy(fixture_edf, tmp_path / "S001R04.edf")
        (tmp_path / "S001R06.edf").write_bytes(b"not an edf")
        assert run("ingest", "--data-dir", tmp_path, "--out", tmp_path / "o", "--strict") == 1
        assert run("ingest", "--data-dir", tmp_path, "--out", tmp_path / "o") == 0


class TestConfigErrors:
    def test_exit_codes(self, tmp_path):
        data = save(tmp_path, structured(3, 1))
        assert run("train", "--dataset", data, "--set", "nonsense") == 1
        assert run("train", "--dataset", data, "--set", "bogus=1") == 1
        assert run("train", "--dataset", data, "--set", "folds=0") == 1
        assert run("train", "--dataset", data, "--config", tmp_path / "none.cfg") == 2
        assert run("train", "--dataset", tmp_path / "missing.rkeg") == 2
        assert run("train") == 2

    def test_unreadable_dataset(self, tmp_path):
        bad = tmp_path / "bad.rkeg"
        bad.write_bytes(b"garbage")
        assert run("train", "--dataset", bad, "--out", tmp_path / "o") == 2


class TestTrain:
    def test_minirocket_deterministic(self, tmp_path):
        data = save(tmp_path, structured(5, 1))
        for name in ("a", "b"):
            assert run("train", "--dataset", data, "--out", tmp_path / name, *FAST) == 0
        assert read(tmp_path / "a" / cli.MODEL_NAME) == read(tmp_path / "b" / cli.MODEL_NAME)
        info = json.loads((tmp_path / "a" / "train.json").read_text())
        assert info["n_train_samples"] == 20
        echo = (tmp_path / "a" / cli.CONFIG_ECHO).read_text()
        assert "n_features = 336" in echo and "seed = 0" in echo

    def test_seed_changes_model(self, tmp_path):
        data = save(tmp_path, structured(5, 1))
        run("train", "--dataset", data, "--out", tmp_path / "a", *FAST)
        run("train", "--dataset", data, "--out", tmp_path / "b", "--seed", 1, *FAST)
        assert read(tmp_path / "a" / cli.MODEL_NAME) != read(tmp_path / "b" / cli.MODEL_NAME)

    def test_cnnlstm_zero_learning_rate(self, tmp_path):
        data = save(tmp_path, structured(4, 1, length=32))
        out = tmp_path / "o"
        code = run("train", "--dataset", data, "--out", out, "--pipeline", "cnnlstm",
                   "--preset", "scaled", "--set", "learning_rate=0", "--set", "epochs=3")
        assert code == 0
        lines = (out / "history.csv").read_text().splitlines()
        assert len(lines) == 4 and len({line.split(",")[1] for line in lines[1:]}) == 1
        for svg in ("loss_curves.svg", "accuracy_curves.svg"):
            assert (out / svg).read_text().startswith("<svg")

    def test_shape_failure_exit_3(self, tmp_path):
        data = save(tmp_path, structured(4, 1, length=32))
        code = run("train", "--dataset", data, "--out", tmp_path / "o", "--pipeline", "cnnlstm",
                   "--set", "lstm_reshape=7,7", "--set", "epochs=1")
        assert code == 3

    def test_ratio_split(self, tmp_path):
        data = save(tmp_path, structured(10, 1))
        assert run("train", "--dataset", data, "--out", tmp_path / "o", "--split", "ratio",
                   *FAST) == 0
        info = json.loads((tmp_path / "o" / "train.json").read_text())
        assert (info["n_train_samples"], info["n_val_samples"]) == (20, 8)


class TestEvaluate:
    def test_separable_task(self, tmp_path):
        data = save(tmp_path, structured(10, 2))
        out = tmp_path / "o"
        assert run("evaluate", "--dataset", data, "--out", out, "--folds", 5, *FAST) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["aggregate"]["mean"]["accuracy"] == 1.0
        assert report["folds"] == 5
        for name in ("folds.csv", "per_class.csv", "confusion.csv", "confusion_normalized.csv",
                     "roc.csv", "roc.svg"):
            assert (out / name).exists(), name
        assert not (out / "history.csv").exists()

    def test_literal_mode_folds(self, tmp_path):
        data = save(tmp_path, structured(21, 2))
        out = tmp_path / "o"
        assert run("evaluate", "--dataset", data, "--out", out, "--mode", "paper-literal",
                   "--no-plots", *FAST) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["folds"] == 10
        assert [r["n_test_trials"] for r in report["fold_reports"]] == [8] * 10
        assert not (out / "roc.svg").exists()

    def test_shuffled_labels_near_chance(self, tmp_path):
        rng = np.random.default_rng(0)
        labels = rng.permutation(np.repeat(np.arange(4), 100))
        data = save(tmp_path, structured(100, 1, length=40, labels=labels))
        out = tmp_path / "o"
        assert run("evaluate", "--dataset", data, "--out", out, "--folds", 5, *FAST) == 0
        acc = json.loads((out / "report.json").read_text())["aggregate"]["mean"]["accuracy"]
        assert abs(acc - 0.25) <= 0.06

    def test_too_many_folds_exit_4(self, tmp_path):
        data = save(tmp_path, structured(3, 1))
        assert run("evaluate", "--dataset", data, "--out", tmp_path / "o", *FAST) == 4

    def test_deterministic_reports(self, tmp_path):
        data = save(tmp_path, structured(6, 1))
        for name in ("a", "b"):
            assert run("evaluate", "--dataset", data, "--out", tmp_path / name, "--folds", 3,
                       *FAST) == 0
        names = sorted(os.listdir(tmp_path / "a"))
        assert names == sorted(os.listdir(tmp_path / "b"))
        for name in names:
            if name != cli.CONFIG_ECHO:
                assert read(tmp_path / "a" / name) == read(tmp_path / "b" / name), name


class TestReport:
    def test_no_reports(self, tmp_path):
        assert run("report", tmp_path) == 5
        assert run("report", tmp_path / "missing") == 5

    def test_mixed_pipelines_and_idempotence(self, tmp_path, capsys):
        data = save(tmp_path, structured(6, 1, length=32))
        runs = tmp_path / "runs"
        assert run("evaluate", "--dataset", data, "--out", runs / "mr", "--folds", 3, *FAST) == 0
        assert run("evaluate", "--dataset", data, "--out", runs / "cnn", "--folds", 3,
                   "--pipeline", "cnnlstm", "--preset", "scaled", "--set", "epochs=2",
                   "--no-plots") == 0
        capsys.readouterr()
        assert run("report", runs) == 0
        first = capsys.readouterr().out
        header = first.splitlines()[2]
        assert "cnn [cnnlstm]" in header and "mr [minirocket]" in header
        assert "recall[" in first and "ovr_acc[" in first
        txt, js = read(runs / cli.SUMMARY_TXT), read(runs / cli.SUMMARY_JSON)
        assert run("report", runs) == 0
        assert capsys.readouterr().out == first
        assert read(runs / cli.SUMMARY_TXT) == txt and read(runs / cli.SUMMARY_JSON) == js
        doc = json.loads(js)
        assert [r["pipeline"] for r in doc["runs"]] == ["cnnlstm", "minirocket"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rockeeg", "--help"], capture_output=True,
                          text=True, check=False)
    assert proc.returncode == 0
    for command in ("ingest", "train", "evaluate", "report"):
        assert command in proc.stdout


@pytest.mark.parametrize("command", ["train", "evaluate"])
def test_flags_listed(command, capsys):
    with pytest.raises(SystemExit):
        cli.main([command, "--help"])
    text = capsys.readouterr().out
    for flag in ("--config", "--seed", "--pipeline", "--out", "--strict"):
        assert flag in text
