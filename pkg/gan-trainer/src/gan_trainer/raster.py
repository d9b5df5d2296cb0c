"""Raw angiogram files as exchanged with the measurement toolkit.

16-byte little-endian header (magic ``OCTA``, uint32 height, uint32 width,
float32 spacing in micrometers) followed by row-major float32 pixels in
[0, 1]. A JSON sidecar ``<name>.json`` carries ``spacing_um``, ``origin_um``
and ``provenance``; absent sidecars default to origin (0, 0), "native".
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<4sIIf")
_MAGIC = b"OCTA"


@dataclass(frozen=True)
class RasterImage:
    pixels: np.ndarray
    spacing_um: float
    origin_um: tuple = (0.0, 0.0)
    provenance: str = "native"

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float32)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("pixels must be a non-empty 2-D array")
        if not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("pixels must be finite and lie in [0, 1]")
        if not (self.spacing_um > 0):
            raise ValueError("spacing_um must be positive")
        object.__setattr__(self, "pixels", px)


def _sidecar(path):
    return Path(path).with_suffix(".json")


def load_raster(path):
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise ValueError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, height, width, spacing = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + height * width * 4
    if len(blob) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(blob)}")
    px = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(height, width)
    origin, provenance = (0.0, 0.0), "native"
    sidecar = _sidecar(path)
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        origin = tuple(meta.get("origin_um", origin))
        provenance = meta.get("provenance", provenance)
    return RasterImage(px, float(spacing), origin, provenance)


def save_raster(img, path):
    path = Path(path)
    header = _HEADER.pack(_MAGIC, img.pixels.shape[0], img.pixels.shape[1],
                          img.spacing_um)
    path.write_bytes(header + img.pixels.astype("<f4").tobytes())
    _sidecar(path).write_text(json.dumps({
        "spacing_um": img.spacing_um,
        "origin_um": list(img.origin_um),
        "provenance": img.provenance,
    }, indent=2, sort_keys=True) + "\n")
    return path
