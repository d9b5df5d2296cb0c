"""Angiogram rasters: metadata-carrying 2-D images with physical-unit operations.

An en-face angiogram is a float image in [0, 1] with isotropic pixel spacing in
micrometers. Pixel (row, col) sits at physical point
``(origin_um[0] + col * spacing_um, origin_um[1] + row * spacing_um)``; the
physical extent is measured center-to-center, ``(width - 1) * spacing_um`` by
``(height - 1) * spacing_um``. Cropping and resampling treat each pixel as a
cell of side ``spacing_um`` centered on its sample point.

Two file representations are supported:

* 8-bit grayscale PNG plus a JSON sidecar holding ``spacing_um``, ``origin_um``
  and ``provenance`` (lossy to 1/255);
* raw float: a 16-byte header (magic ``OCTA``, u32 width, u32 height,
  f32 spacing_um, all little-endian) followed by row-major little-endian f32
  pixels (lossless). A sidecar is written alongside for origin and provenance;
  loading without one falls back to origin (0, 0).
"""

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

MAGIC = b"OCTA"
HEADER = struct.Struct("<4sIIf")

RESAMPLE_METHODS = ("nearest", "bilinear", "bicubic", "area_average")

# map_coordinates spline orders for the point-sampling methods
_SPLINE_ORDER = {"nearest": 0, "bilinear": 1, "bicubic": 3}


@dataclass(frozen=True)
class Angiogram:
    """A 2-D angiogram raster with physical metadata.

    pixels are stored float32 so raw-float round trips are bit-identical.
    """

    pixels: np.ndarray
    spacing_um: float
    origin_um: tuple = (0.0, 0.0)
    provenance: str = "native"

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float32)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("pixels must be a non-empty 2-D array")
        if not np.all(np.isfinite(px)):
            raise ValueError("pixels contain non-finite values")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")
        if not (self.spacing_um > 0):
            raise ValueError(f"spacing_um must be positive, got {self.spacing_um}")
        origin = (float(self.origin_um[0]), float(self.origin_um[1]))
        object.__setattr__(self, "pixels", px)
        object.__setattr__(self, "spacing_um", float(self.spacing_um))
        object.__setattr__(self, "origin_um", origin)

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def extent_um(self):
        """Physical extent (x, y), center-to-center."""
        return ((self.width - 1) * self.spacing_um, (self.height - 1) * self.spacing_um)

    @property
    def center_um(self):
        return (
            self.origin_um[0] + 0.5 * (self.width - 1) * self.spacing_um,
            self.origin_um[1] + 0.5 * (self.height - 1) * self.spacing_um,
        )


@dataclass(frozen=True)
class PhysicalRegion:
    """Axis-aligned rectangle in physical micrometers."""

    center_um: tuple
    extent_um: tuple

    def __post_init__(self):
        if not (self.extent_um[0] > 0 and self.extent_um[1] > 0):
            raise ValueError("region extent must be positive")


def _sidecar_path(path):
    return Path(path).with_suffix(".json")


def _sidecar_dict(img):
    return {
        "spacing_um": img.spacing_um,
        "origin_um": [img.origin_um[0], img.origin_um[1]],
        "provenance": img.provenance,
    }


def save_angiogram(img, path, format="raw"):
    """Write ``img`` to ``path`` as ``"raw"`` float or 8-bit ``"png"``.

    Both formats get a JSON sidecar next to the image. Raw round trips are
    bit-identical; PNG round trips are exact to within 1/255.
    """
    path = Path(path)
    if format == "raw":
        with open(path, "wb") as fh:
            fh.write(HEADER.pack(MAGIC, img.width, img.height, img.spacing_um))
            fh.write(np.ascontiguousarray(img.pixels, dtype="<f4").tobytes())
    elif format == "png":
        quantized = np.round(img.pixels.astype(np.float64) * 255.0).astype(np.uint8)
        Image.fromarray(quantized, mode="L").save(path, format="PNG")
    else:
        raise ValueError(f"unknown format {format!r}")
    _sidecar_path(path).write_text(
        json.dumps(_sidecar_dict(img), indent=2, sort_keys=True) + "\n"
    )
    return path


def load_angiogram(path):
    """Load an angiogram saved by :func:`save_angiogram`.

    Format is chosen by content: raw-float files start with the ``OCTA`` magic,
    anything else is handed to Pillow and must be 8-bit grayscale with a valid
    sidecar (the raw header already carries the spacing, so its sidecar is
    optional).
    """
    path = Path(path)
    blob = path.read_bytes()
    if blob[:4] == MAGIC:
        return _load_raw(path, blob)
    return _load_png(path)


def _read_sidecar(path, required):
    sc = _sidecar_path(path)
    if not sc.exists():
        if required:
            raise ValueError(f"missing sidecar {sc}")
        return None
    try:
        meta = json.loads(sc.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid sidecar {sc}: {exc}") from exc
    if required and "spacing_um" not in meta:
        raise ValueError(f"sidecar {sc} lacks spacing_um")
    return meta


def _load_raw(path, blob):
    if len(blob) < HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, width, height, spacing = HEADER.unpack_from(blob)
    expected = HEADER.size + 4 * width * height
    if len(blob) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(blob)}")
    px = np.frombuffer(blob, dtype="<f4", offset=HEADER.size).reshape(height, width)
    if np.isnan(px).any():
        raise ValueError(f"{path}: NaN pixels in raw float data")
    meta = _read_sidecar(path, required=False) or {}
    return Angiogram(
        pixels=px.copy(),
        spacing_um=spacing,
        origin_um=tuple(meta.get("origin_um", (0.0, 0.0))),
        provenance=meta.get("provenance", "native"),
    )


def _load_png(path):
    with Image.open(path) as im:
        if im.mode != "L":
            raise ValueError(f"{path}: expected 8-bit grayscale, got mode {im.mode!r}")
        px = np.asarray(im, dtype=np.float32) / 255.0
    meta = _read_sidecar(path, required=True)
    spacing = meta["spacing_um"]
    if not (isinstance(spacing, (int, float)) and spacing > 0):
        raise ValueError(f"{path}: sidecar spacing_um invalid: {spacing!r}")
    return Angiogram(
        pixels=px,
        spacing_um=spacing,
        origin_um=tuple(meta.get("origin_um", (0.0, 0.0))),
        provenance=meta.get("provenance", "native"),
    )


def _cover_bounds(lo_um, hi_um, origin, spacing, count):
    """Smallest run of pixel cells covering [lo_um, hi_um] along one axis.

    Cell i covers [i - 1/2, i + 1/2] in index units; exact half ties resolve
    to the lower index.
    """
    u_lo = (lo_um - origin) / spacing
    u_hi = (hi_um - origin) / spacing
    tol = 1e-9 * max(1.0, abs(u_lo), abs(u_hi))
    if u_lo < -tol or u_hi > (count - 1) + tol:
        raise ValueError(
            f"region [{lo_um}, {hi_um}] um exceeds extent "
            f"[{origin}, {origin + (count - 1) * spacing}] um"
        )
    i0 = math.ceil(u_lo - 0.5 - tol)
    i1 = math.ceil(u_hi - 0.5 - tol)
    return max(i0, 0), min(max(i1, 0), count - 1)


def crop_physical(img, region):
    """Crop to the smallest pixel window covering ``region`` (physical um)."""
    cx, cy = region.center_um
    ex, ey = region.extent_um
    c0, c1 = _cover_bounds(cx - ex / 2, cx + ex / 2, img.origin_um[0], img.spacing_um, img.width)
    r0, r1 = _cover_bounds(cy - ey / 2, cy + ey / 2, img.origin_um[1], img.spacing_um, img.height)
    return Angiogram(
        pixels=img.pixels[r0 : r1 + 1, c0 : c1 + 1].copy(),
        spacing_um=img.spacing_um,
        origin_um=(
            img.origin_um[0] + c0 * img.spacing_um,
            img.origin_um[1] + r0 * img.spacing_um,
        ),
        provenance=img.provenance,
    )


def _overlap_weights(n_in, s_in, n_out, s_out):
    """Row-stochastic matrix of cell-overlap fractions for one axis."""
    in_edges = np.arange(n_in + 1) * s_in
    out_edges = np.arange(n_out + 1) * s_out
    lo = np.maximum(out_edges[:-1, None], in_edges[None, :-1])
    hi = np.minimum(out_edges[1:, None], in_edges[None, 1:])
    w = np.clip(hi - lo, 0.0, None)
    return w / w.sum(axis=1, keepdims=True)


def resample(img, new_spacing_um, method="area_average"):
    """Resample onto an isotropic grid at ``new_spacing_um``.

    ``method`` is one of ``nearest | bilinear | bicubic | area_average``. The
    output grid tiles the same cell footprint, so physical extent is preserved
    to within one output pixel; ``area_average`` computes exact cell-overlap
    means and is the required choice when downsampling. Output values are
    clamped to [0, 1].
    """
    if method not in RESAMPLE_METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {RESAMPLE_METHODS}")
    if not (new_spacing_um > 0):
        raise ValueError("new_spacing_um must be positive")
    s_in = img.spacing_um
    n_rows = max(1, round(img.height * s_in / new_spacing_um))
    n_cols = max(1, round(img.width * s_in / new_spacing_um))

    if method == "area_average":
        wy = _overlap_weights(img.height, s_in, n_rows, new_spacing_um)
        wx = _overlap_weights(img.width, s_in, n_cols, new_spacing_um)
        out = wy @ img.pixels.astype(np.float64) @ wx.T
    else:
        # sample at new cell centers, mapped into input index coordinates
        rows = (np.arange(n_rows) + 0.5) * new_spacing_um / s_in - 0.5
        cols = (np.arange(n_cols) + 0.5) * new_spacing_um / s_in - 0.5
        grid = np.meshgrid(rows, cols, indexing="ij")
        out = ndimage.map_coordinates(
            img.pixels.astype(np.float64),
            np.stack([g.ravel() for g in grid]),
            order=_SPLINE_ORDER[method],
            mode="nearest",
        ).reshape(n_rows, n_cols)

    return Angiogram(
        pixels=np.clip(out, 0.0, 1.0),
        spacing_um=new_spacing_um,
        origin_um=(
            img.origin_um[0] - 0.5 * s_in + 0.5 * new_spacing_um,
            img.origin_um[1] - 0.5 * s_in + 0.5 * new_spacing_um,
        ),
        provenance=img.provenance,
    )
