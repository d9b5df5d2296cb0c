import numpy as np
import pytest
import torch

from gan_trainer.data import UnpairedFolders
from gan_trainer.raster import RasterImage, save_raster


def _fill(folder, n, seed):
    folder.mkdir(parents=True)
    rng = np.random.default_rng(seed)
    for i in range(n):
        img = RasterImage(rng.random((16, 16), dtype=np.float32), 10.0)
        save_raster(img, folder / f"img_{i:03d}.raw")


def test_empty_domain_rejected(tmp_path):
    _fill(tmp_path / "trainB", 2, 0)
    with pytest.raises(ValueError, match="trainA"):
        UnpairedFolders(tmp_path)


def test_missing_directory_rejected(tmp_path):
    with pytest.raises(ValueError, match="no training images"):
        UnpairedFolders(tmp_path)


def test_steps_per_epoch_covers_larger_domain(tmp_path):
    _fill(tmp_path / "trainA", 3, 0)
    _fill(tmp_path / "trainB", 5, 1)
    ds = UnpairedFolders(tmp_path)
    assert ds.steps_per_epoch == 5


def test_sampling_is_seed_deterministic(tmp_path):
    _fill(tmp_path / "trainA", 4, 0)
    _fill(tmp_path / "trainB", 4, 1)
    ds = UnpairedFolders(tmp_path)
    draws = []
    for _ in range(2):
        g = torch.Generator().manual_seed(11)
        draws.append([ds.sample(g, 2) for _ in range(5)])
    for (a1, b1), (a2, b2) in zip(*draws):
        assert torch.equal(a1, a2)
        assert torch.equal(b1, b2)


def test_batch_shape(tmp_path):
    _fill(tmp_path / "trainA", 2, 0)
    _fill(tmp_path / "trainB", 2, 1)
    a, b = UnpairedFolders(tmp_path).sample(torch.Generator().manual_seed(0), 3)
    assert a.shape == (3, 1, 16, 16)
    assert b.shape == (3, 1, 16, 16)
    assert a.dtype == torch.float32


def test_reads_emitted_layout(smoke_dataset):
    ds = UnpairedFolders(smoke_dataset)
    assert len(ds.a) == 10
    assert len(ds.b) == 10
    assert ds.a[0].shape == (1, 64, 64)
