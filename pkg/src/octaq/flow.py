"""Profile-based caliber readout and parafoveal signal statistics.

Vessel caliber is measured as the full width at half maximum of an intensity
profile sampled along a physical line across the vessel; flow deficit between
two acquisitions of the same site is the relative FWHM discrepancy. Image-level
signal-to-noise compares the parafoveal annulus against the avascular zone.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class IntensityProfile:
    """Samples along a straight physical segment, uniformly spaced."""

    samples: np.ndarray
    sample_spacing_um: float
    p0_um: tuple
    p1_um: tuple

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size < 8:
            raise ValueError(f"need at least 8 samples, got {samples.size}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("profile contains non-finite samples")
        if not (self.sample_spacing_um > 0):
            raise ValueError("sample_spacing_um must be positive")
        object.__setattr__(self, "samples", samples)

    @property
    def length_um(self):
        return (self.samples.size - 1) * self.sample_spacing_um


@dataclass(frozen=True)
class AnnulusSpec:
    """Parafoveal annulus; diameters in micrometers."""

    center_um: tuple
    outer_diameter_um: float = 2500.0
    inner_diameter_um: float = 600.0

    def __post_init__(self):
        if not (0 < self.inner_diameter_um < self.outer_diameter_um):
            raise ValueError("require 0 < inner diameter < outer diameter")


def intensity_profile(img, p0_um, p1_um, n_samples=64):
    """Bilinearly sample ``img`` along the segment p0 -> p1 (physical um)."""
    if n_samples < 8:
        raise ValueError("n_samples must be at least 8")
    p0 = np.asarray(p0_um, dtype=np.float64)
    p1 = np.asarray(p1_um, dtype=np.float64)
    length = float(np.linalg.norm(p1 - p0))
    if length <= 0:
        raise ValueError("profile endpoints coincide")
    ox, oy = img.origin_um
    ex, ey = img.extent_um
    for p in (p0, p1):
        if not (ox - 1e-9 <= p[0] <= ox + ex + 1e-9 and oy - 1e-9 <= p[1] <= oy + ey + 1e-9):
            raise ValueError(f"endpoint {tuple(p)} um outside image extent")
    t = np.linspace(0.0, 1.0, n_samples)
    xs = p0[0] + t * (p1[0] - p0[0])
    ys = p0[1] + t * (p1[1] - p0[1])
    coords = np.stack([(ys - oy) / img.spacing_um, (xs - ox) / img.spacing_um])
    samples = ndimage.map_coordinates(
        img.pixels.astype(np.float64), coords, order=1, mode="nearest"
    )
    return IntensityProfile(
        samples=samples,
        sample_spacing_um=length / (n_samples - 1),
        p0_um=(p0[0], p0[1]),
        p1_um=(p1[0], p1[1]),
    )


def _plateau_peak(samples):
    """Index span of the unique maximal plateau; errors on split maxima."""
    peak_value = samples.max()
    at_peak = np.flatnonzero(samples == peak_value)
    runs = np.split(at_peak, np.flatnonzero(np.diff(at_peak) != 1) + 1)
    if len(runs) > 1:
        candidates = [int(r[0]) for r in runs]
        raise ValueError(f"multiple equal maxima at sample indices {candidates}")
    return int(at_peak[0]), int(at_peak[-1])


def fwhm(profile):
    """Full width at half maximum of a single-peaked profile, in micrometers.

    The baseline is the profile minimum and the half level sits midway between
    baseline and peak. Crossings on each side of the peak are located by linear
    interpolation between the neighboring samples. A contiguous plateau of
    equal maxima counts as one peak; a constant profile, non-adjacent equal
    maxima, a peak touching the profile boundary, or a side that never reaches
    the half level raise ``ValueError``.
    """
    y = profile.samples
    baseline = float(y.min())
    if float(y.max()) <= baseline:
        raise ValueError("profile is constant")
    lo, hi = _plateau_peak(y)
    if lo == 0 or hi == y.size - 1:
        raise ValueError("peak touches the profile boundary")
    half = baseline + 0.5 * (y.max() - baseline)

    def cross(start, step):
        i = start
        while 0 <= i + step < y.size:
            j = i + step
            if y[j] < half:
                # linear interpolation between samples i and j
                frac = (y[i] - half) / (y[i] - y[j])
                return i + step * frac
            i = j
        side = "left" if step < 0 else "right"
        raise ValueError(f"profile never falls below the half level on the {side} side")

    left = cross(lo, -1)
    right = cross(hi, +1)
    return (right - left) * profile.sample_spacing_um


def caliber_discrepancy(width_um, width_hd_um):
    """Relative caliber error |w - w_hd| / w_hd as a percentage."""
    if not (width_hd_um > 0):
        raise ValueError("reference width must be positive")
    return abs(width_um - width_hd_um) / width_hd_um * 100.0


def parafoveal_snr(img, annulus=None, faz_mask=None, faz_diameter_um=600.0):
    """(mean annulus - mean FAZ) / FAZ sample standard deviation.

    ``annulus`` defaults to the 2.5 mm / 0.6 mm ring about the image center;
    ``faz_mask`` defaults to the central disc of ``faz_diameter_um``. Pixel
    membership is by pixel-center position. The annulus must lie inside the
    physical extent and the FAZ values must not be constant.
    """
    from .vessel import disc_mask  # local import: vessel depends on raster only

    if annulus is None:
        annulus = AnnulusSpec(center_um=img.center_um)
    ox, oy = img.origin_um
    ex, ey = img.extent_um
    r_out = annulus.outer_diameter_um / 2.0
    cx, cy = annulus.center_um
    if (cx - r_out < ox - 1e-9 or cx + r_out > ox + ex + 1e-9
            or cy - r_out < oy - 1e-9 or cy + r_out > oy + ey + 1e-9):
        raise ValueError("annulus extends beyond the image extent")
    if faz_mask is None:
        faz_mask = disc_mask(img, faz_diameter_um, annulus.center_um)
    else:
        faz_mask = np.asarray(faz_mask, dtype=bool)
        if faz_mask.shape != img.pixels.shape:
            raise ValueError("faz_mask shape must match the image")

    cols = ox + np.arange(img.width) * img.spacing_um
    rows = oy + np.arange(img.height) * img.spacing_um
    d2 = (cols[None, :] - cx) ** 2 + (rows[:, None] - cy) ** 2
    ring = (d2 > (annulus.inner_diameter_um / 2.0) ** 2) & (d2 <= r_out**2)
    if not ring.any():
        raise ValueError("annulus selects no pixels")

    faz_values = img.pixels[faz_mask].astype(np.float64)
    if faz_values.size < 2:
        raise ValueError("FAZ mask selects fewer than 2 pixels")
    sigma = faz_values.std(ddof=1)
    if sigma == 0:
        raise ValueError("FAZ values are constant; SNR undefined")
    return float((img.pixels[ring].astype(np.float64).mean() - faz_values.mean()) / sigma)
