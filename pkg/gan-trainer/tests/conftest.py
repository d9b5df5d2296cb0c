"""Shared fixtures: phantom datasets come from the measurement CLI."""

import shutil
import subprocess

import pytest


def octaq_cli(*args):
    """Run the measurement tool's CLI; the dataset layout is its contract."""
    exe = shutil.which("octaq")
    if exe is None:
        raise RuntimeError("the octaq CLI must be installed to run these tests")
    return subprocess.run([exe, *args], check=True, capture_output=True, text=True)


@pytest.fixture(scope="session")
def smoke_dataset(tmp_path_factory):
    """Ten unpaired 64x64 tile pairs, no augmentation: 10 steps per epoch."""
    root = tmp_path_factory.mktemp("smoke") / "ds"
    octaq_cli("phantom", "--out", str(root),
              "--fov-um", "1200", "--spacing-um", "18.75",
              "--faz-radius-um", "200,250",
              "--n-train", "10", "--n-test", "2",
              "--augment-factor", "0", "--seed", "7")
    return root
