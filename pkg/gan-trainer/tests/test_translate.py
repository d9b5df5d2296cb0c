import numpy as np
import pytest
import torch

from gan_trainer.networks import Generator
from gan_trainer.raster import RasterImage, load_raster, save_raster
from gan_trainer.translate import apply_checkpoint, load_generator


def _untrained_checkpoint(path, base_width=16, n_res_blocks=2, seed=0):
    torch.manual_seed(seed)
    net = Generator(base_width, n_res_blocks)
    torch.save({
        "arch": {"base_width": base_width, "n_res_blocks": n_res_blocks},
        "g_ab": net.state_dict(),
    }, path)
    return path


def _input_dir(tmp_path, n=4):
    folder = tmp_path / "in"
    folder.mkdir()
    rng = np.random.default_rng(8)
    for i in range(n):
        img = RasterImage(rng.random((32, 32), dtype=np.float32), 23.4,
                          origin_um=(5.0, 7.0), provenance="degraded")
        save_raster(img, folder / f"tile_{i}.raw")
    return folder


def test_untrained_generator_tracks_input(tmp_path):
    ckpt = _untrained_checkpoint(tmp_path / "c.pt")
    in_dir = _input_dir(tmp_path)
    out_dir = tmp_path / "out"
    apply_checkpoint(ckpt, in_dir, out_dir)
    for src in in_dir.glob("*.raw"):
        a = load_raster(src).pixels
        b = load_raster(out_dir / src.name).pixels
        assert np.abs(b - a).max() < 0.15  # within initialization noise


def test_output_metadata_and_count(tmp_path):
    ckpt = _untrained_checkpoint(tmp_path / "c.pt")
    in_dir = _input_dir(tmp_path, n=3)
    out_dir = tmp_path / "out"
    written = apply_checkpoint(ckpt, in_dir, out_dir)
    assert sorted(p.name for p in written) == sorted(
        p.name for p in in_dir.glob("*.raw"))
    for path in written:
        img = load_raster(path)
        assert img.provenance == "generated"
        assert img.spacing_um == pytest.approx(23.4)
        assert img.origin_um == (5.0, 7.0)
        assert img.pixels.min() >= 0.0
        assert img.pixels.max() <= 1.0


def test_missing_checkpoint_keys_rejected(tmp_path):
    path = tmp_path / "c.pt"
    torch.save({"arch": {"base_width": 16, "n_res_blocks": 2}}, path)
    with pytest.raises(ValueError, match="g_ab"):
        load_generator(path)


def test_incompatible_weights_rejected(tmp_path):
    torch.manual_seed(0)
    net = Generator(base_width=16)
    path = tmp_path / "c.pt"
    torch.save({
        "arch": {"base_width": 8, "n_res_blocks": 2},
        "g_ab": net.state_dict(),
    }, path)
    with pytest.raises(RuntimeError):
        load_generator(path)


def test_empty_input_dir_rejected(tmp_path):
    ckpt = _untrained_checkpoint(tmp_path / "c.pt")
    empty = tmp_path / "in"
    empty.mkdir()
    with pytest.raises(ValueError, match="no raster images"):
        apply_checkpoint(ckpt, empty, tmp_path / "out")
