import numpy as np
import pytest

from gan_trainer.raster import RasterImage, load_raster, save_raster


def _image(seed=0, shape=(6, 8)):
    rng = np.random.default_rng(seed)
    return RasterImage(
        pixels=rng.random(shape, dtype=np.float32),
        spacing_um=12.25,
        origin_um=(30.0, -10.0),
        provenance="degraded",
    )


def test_round_trip(tmp_path):
    img = _image()
    path = save_raster(img, tmp_path / "img.raw")
    back = load_raster(path)
    assert np.array_equal(back.pixels, img.pixels)
    assert back.spacing_um == pytest.approx(12.25)
    assert back.origin_um == (30.0, -10.0)
    assert back.provenance == "degraded"


def test_missing_sidecar_defaults(tmp_path):
    path = save_raster(_image(), tmp_path / "img.raw")
    (tmp_path / "img.json").unlink()
    back = load_raster(path)
    assert back.origin_um == (0.0, 0.0)
    assert back.provenance == "native"


def test_truncated_header_rejected(tmp_path):
    path = tmp_path / "short.raw"
    path.write_bytes(b"OCTA\x01")
    with pytest.raises(ValueError, match="truncated"):
        load_raster(path)


def test_bad_magic_rejected(tmp_path):
    path = save_raster(_image(), tmp_path / "img.raw")
    blob = bytearray(path.read_bytes())
    blob[:4] = b"JUNK"
    path.write_bytes(bytes(blob))
    with pytest.raises(ValueError, match="magic"):
        load_raster(path)


def test_payload_size_mismatch_rejected(tmp_path):
    path = save_raster(_image(), tmp_path / "img.raw")
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(ValueError, match="bytes"):
        load_raster(path)


@pytest.mark.parametrize("pixels", [
    np.ones((0, 4), dtype=np.float32),
    np.ones((3,), dtype=np.float32),
    np.full((2, 2), 1.5, dtype=np.float32),
    np.full((2, 2), np.nan, dtype=np.float32),
])
def test_bad_pixels_rejected(pixels):
    with pytest.raises(ValueError):
        RasterImage(pixels=pixels, spacing_um=10.0)


def test_nonpositive_spacing_rejected():
    with pytest.raises(ValueError):
        RasterImage(pixels=np.zeros((2, 2), dtype=np.float32), spacing_um=0.0)
