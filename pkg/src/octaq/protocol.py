"""Scan-protocol arithmetic: transverse sampling density versus A-line budget.

A raster protocol is fully determined by the field of view, the transverse
sample count (or equivalently the sampling spacing), the number of repeated
B-scans per location, and the total acquisition time. The A-line rate needed
to realize a protocol is

    rate = (fov / spacing)^2 * repeats / duration

and transverse resolution is only realized when the spacing reaches the
Nyquist limit of half the optical spot size.
"""

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ScanProtocol:
    fov_um: float
    spacing_um: float
    repeats: int
    duration_s: float

    def __post_init__(self):
        for name in ("fov_um", "spacing_um", "duration_s"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if self.spacing_um > self.fov_um:
            raise ValueError(
                f"spacing {self.spacing_um} um exceeds field of view {self.fov_um} um"
            )
        if not (isinstance(self.repeats, int) and self.repeats >= 1):
            raise ValueError(f"repeats must be a positive integer, got {self.repeats!r}")

    @property
    def samples_per_line(self):
        return self.fov_um / self.spacing_um


def sampling_spacing(fov_um, samples):
    """Center-to-center transverse spacing of ``samples`` A-scans over ``fov_um``."""
    if not (fov_um > 0):
        raise ValueError("fov_um must be positive")
    if not (isinstance(samples, int) and samples >= 2):
        raise ValueError(f"samples must be an integer >= 2, got {samples!r}")
    return fov_um / samples


def nyquist_spacing(optical_resolution_um):
    """Largest spacing that still critically samples ``optical_resolution_um``."""
    if not (optical_resolution_um > 0):
        raise ValueError("optical_resolution_um must be positive")
    return optical_resolution_um / 2.0


def required_aline_rate(protocol):
    """A-line rate (Hz) needed to acquire ``protocol`` in its duration."""
    n = protocol.samples_per_line
    return n * n * protocol.repeats / protocol.duration_s


def is_nyquist_sampled(protocol, optical_resolution_um):
    return protocol.spacing_um <= nyquist_spacing(optical_resolution_um)
