"""Acceptance suite: one check per release criterion, each with a time budget.

Under pytest every criterion is one test. Running the file directly prints a
single PASS/FAIL line per criterion instead:

    python tests/test_acceptance.py

Criterion numbering continues the measurement toolkit's suite (1-8 live
there); this package owns 9 and 10.
"""

import json
import math
import shutil
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import torch

from gan_trainer.config import TrainConfig
from gan_trainer.losses import loss_adversarial, loss_cycle, loss_identity
from gan_trainer.train import train
from gan_trainer.translate import apply_checkpoint


def _octaq(*args):
    exe = shutil.which("octaq")
    if exe is None:
        raise RuntimeError("the octaq CLI must be installed for acceptance runs")
    return subprocess.run([exe, *args], check=True, capture_output=True, text=True)


def _smoke_dataset(root):
    _octaq("phantom", "--out", str(root),
           "--fov-um", "1200", "--spacing-um", "18.75",
           "--faz-radius-um", "200,250",
           "--n-train", "10", "--n-test", "2",
           "--augment-factor", "0", "--seed", "7")
    return root


# --------------------------------------------------------------------------
# criterion bodies: each returns a short human-readable detail string and
# raises AssertionError on any violated bound
# --------------------------------------------------------------------------


def criterion_9_loss_identities(dataset_dir, out_dir):
    a = torch.rand(2, 1, 8, 8)
    b = torch.rand(2, 1, 8, 8)
    assert loss_cycle(a, a.clone(), b, b.clone()).item() == 0.0
    assert loss_identity(b, b.clone(), a, a.clone()).item() == 0.0

    half = torch.full((6,), 0.5)
    _, disc = loss_adversarial(half, half)
    expected = 2.0 * math.log(2.0)
    assert abs(disc.item() - expected) / expected < 1e-6, f"disc at 0.5: {disc}"

    # 10 tiles, no augmentation -> 10 steps/epoch; 20 epochs = 200 steps
    cfg = TrainConfig(dataset_dir=dataset_dir, out_dir=out_dir,
                      epochs=20, seed=0)
    records = train(cfg).records
    assert len(records) == 200, f"expected 200 steps, ran {len(records)}"
    first10 = sum(r.total for r in records[:10]) / 10.0
    final = records[-1].total
    assert final < first10, f"total {final:.4f} did not drop below {first10:.4f}"
    first_ma = sum(r.total for r in records[:50]) / 50.0
    last_ma = sum(r.total for r in records[-50:]) / 50.0
    assert last_ma < first_ma, f"50-step average {last_ma:.4f} vs {first_ma:.4f}"
    return (f"identities exact, disc(0.5) = 2 log 2, "
            f"smoke total {first10:.3f} -> {final:.3f}")


def criterion_10_end_to_end(work):
    work = Path(work)
    ds = work / "ds"
    _octaq("phantom", "--out", str(ds),
           "--fov-um", "3000", "--spacing-um", "23.4375",
           "--coarse-um", "46.875",
           "--n-train", "32", "--n-test", "5",
           "--augment-factor", "0", "--seed", "11")

    cfg = TrainConfig(dataset_dir=ds, out_dir=work / "run", epochs=20, seed=0)
    result = train(cfg)
    assert len(result.records) == 20 * 32

    generated = work / "generated"
    written = apply_checkpoint(result.checkpoint_path, ds / "testA", generated)
    assert len(written) == 5

    bundle_path = work / "bundle.json"
    _octaq("evaluate", "--orig", str(ds / "testA"), "--gen", str(generated),
           "--ref", str(ds / "testB"), "--dims", "64",
           "--out", str(bundle_path))
    bundle = json.loads(bundle_path.read_text())
    row = next(r for r in bundle["perceptual"]["rows"] if r["d"] == 64)
    fid_gen = row["fid_generated"]
    fid_orig = row["fid_original"]
    assert fid_gen < fid_orig, (
        f"FID(generated, native) {fid_gen:.6f} not below "
        f"FID(degraded, native) {fid_orig:.6f}")
    return f"FID generated {fid_gen:.6f} < degraded {fid_orig:.6f}"


_BUDGETS_S = {9: 600, 10: 3600}


def _run(number, body, *args):
    start = time.perf_counter()
    detail = body(*args)
    elapsed = time.perf_counter() - start
    budget = _BUDGETS_S[number]
    assert elapsed < budget, f"criterion {number} took {elapsed:.1f}s (budget {budget}s)"
    print(f"criterion {number}: PASS in {elapsed:.2f}s ({detail})")


def test_criterion_9_loss_identities(smoke_dataset, tmp_path):
    _run(9, criterion_9_loss_identities, smoke_dataset, tmp_path / "run")


def test_criterion_10_end_to_end(tmp_path):
    _run(10, criterion_10_end_to_end, tmp_path)


def main():
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        jobs = (
            (9, criterion_9_loss_identities,
             (_smoke_dataset(tmp / "smoke"), tmp / "smoke-run")),
            (10, criterion_10_end_to_end, (tmp / "e2e",)),
        )
        for number, body, args in jobs:
            try:
                _run(number, body, *args)
            except Exception as exc:
                failures += 1
                print(f"criterion {number}: FAIL ({exc})")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
