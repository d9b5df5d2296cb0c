import json

import numpy as np
import pytest

from gan_trainer import cli
from gan_trainer.raster import load_raster


def test_train_then_apply(smoke_dataset, tmp_path, capsys):
    run = tmp_path / "run"
    code = cli.main([
        "train", "--dataset", str(smoke_dataset), "--out", str(run),
        "--epochs", "1", "--seed", "3",
    ])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["steps"] == 10
    assert report["config"]["seed"] == 3
    assert (run / "loss_log.csv").exists()

    out = tmp_path / "gen"
    code = cli.main([
        "apply", "--checkpoint", report["checkpoint"],
        "--images", str(smoke_dataset / "testA"), "--out", str(out),
    ])
    assert code == 0
    applied = json.loads(capsys.readouterr().out)
    assert len(applied["written"]) == 2
    img = load_raster(out / applied["written"][0])
    assert img.provenance == "generated"
    assert img.pixels.shape == (64, 64)
    assert float(np.min(img.pixels)) >= 0.0


def test_bad_dataset_exits_one(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    code = cli.main(["train", "--dataset", str(empty),
                     "--out", str(tmp_path / "run")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_bad_checkpoint_exits_one(tmp_path, capsys):
    missing = tmp_path / "none.pt"
    code = cli.main(["apply", "--checkpoint", str(missing),
                     "--images", str(tmp_path), "--out", str(tmp_path / "o")])
    assert code == 1


def test_missing_weights_exits_one(smoke_dataset, tmp_path, capsys,
                                   monkeypatch):
    monkeypatch.delenv("GAN_TRAINER_INCEPTION_WEIGHTS", raising=False)
    code = cli.main(["export-features",
                     "--images", str(smoke_dataset / "testA"),
                     "--out", str(tmp_path / "feat"), "--dims", "64"])
    assert code == 1
    assert "GAN_TRAINER_INCEPTION_WEIGHTS" in capsys.readouterr().err


def test_argument_errors_exit_two():
    with pytest.raises(SystemExit) as exc:
        cli.main(["train", "--out", "somewhere"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["export-features", "--images", "x", "--out", "y",
                  "--dims", "sixty-four"])
    assert exc.value.code == 2
