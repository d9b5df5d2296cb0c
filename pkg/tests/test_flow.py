import numpy as np
import pytest

from octaq.flow import (
    AnnulusSpec,
    IntensityProfile,
    caliber_discrepancy,
    fwhm,
    intensity_profile,
    parafoveal_snr,
)
from octaq.raster import Angiogram


def _profile(samples, spacing=1.0):
    samples = np.asarray(samples, dtype=np.float64)
    return IntensityProfile(samples, spacing, (0.0, 0.0), (len(samples) * spacing, 0.0))


# ------------------------------------------------------------------- sampling


def test_profile_on_linear_ramp():
    w = 21
    px = np.tile(np.linspace(0, 1, w, dtype=np.float32), (21, 1))
    img = Angiogram(px, 10.0)
    prof = intensity_profile(img, (0.0, 100.0), (200.0, 100.0), n_samples=11)
    assert prof.samples == pytest.approx(np.linspace(0, 1, 11), abs=1e-6)
    assert prof.sample_spacing_um == pytest.approx(20.0)
    assert prof.length_um == pytest.approx(200.0)


def test_profile_diagonal_on_plane():
    yy, xx = np.mgrid[:30, :30]
    px = ((xx + 2 * yy) / (3 * 29)).astype(np.float32)
    img = Angiogram(px, 5.0)
    prof = intensity_profile(img, (10.0, 20.0), (100.0, 80.0), n_samples=16)
    # bilinear sampling is exact on an affine field
    x = np.linspace(10, 100, 16) / 5
    y = np.linspace(20, 80, 16) / 5
    assert prof.samples == pytest.approx((x + 2 * y) / (3 * 29), abs=1e-6)


def test_profile_validation():
    img = Angiogram(np.zeros((20, 20), dtype=np.float32), 10.0)
    with pytest.raises(ValueError, match="at least 8"):
        intensity_profile(img, (0, 0), (50, 0), n_samples=4)
    with pytest.raises(ValueError, match="coincide"):
        intensity_profile(img, (50, 50), (50, 50))
    with pytest.raises(ValueError, match="extent"):
        intensity_profile(img, (0, 0), (500, 0))
    with pytest.raises(ValueError, match="extent"):
        intensity_profile(img, (-5, 0), (50, 0))


def test_profile_type_validation():
    with pytest.raises(ValueError, match="at least 8"):
        IntensityProfile(np.zeros(5), 1.0, (0, 0), (5, 0))
    with pytest.raises(ValueError):
        IntensityProfile(np.full(10, np.nan), 1.0, (0, 0), (10, 0))
    with pytest.raises(ValueError):
        IntensityProfile(np.zeros(10), -1.0, (0, 0), (10, 0))


# ----------------------------------------------------------------------- FWHM


def test_fwhm_box_profile_exact():
    samples = np.zeros(30)
    samples[10:20] = 1.0
    # half-crossings interpolate to the cell edges: exactly 10 samples wide
    assert fwhm(_profile(samples, spacing=2.5)) == pytest.approx(10 * 2.5)


def test_fwhm_gaussian():
    x = np.arange(-30, 31, dtype=np.float64)
    sigma = 5.0
    prof = _profile(np.exp(-0.5 * (x / sigma) ** 2))
    assert fwhm(prof) == pytest.approx(2.3548 * sigma, rel=0.02)


def test_fwhm_uses_minimum_as_baseline():
    x = np.arange(-20, 21, dtype=np.float64)
    prof = _profile(0.2 + 0.6 * np.exp(-0.5 * (x / 4.0) ** 2))
    # baseline 0.2, peak 0.8: half level at 0.5, same width as the unshifted pulse
    expected = fwhm(_profile(np.exp(-0.5 * (x / 4.0) ** 2)))
    assert fwhm(prof) == pytest.approx(expected, rel=1e-6)


def test_fwhm_plateau_counts_as_one_peak():
    samples = np.array([0, 0, 1, 1, 0, 0, 0, 0], dtype=float)
    assert fwhm(_profile(samples)) == pytest.approx(2.0)


def test_fwhm_separated_maxima_rejected():
    samples = np.array([0, 1, 0, 0, 1, 0, 0, 0], dtype=float)
    with pytest.raises(ValueError, match="multiple equal maxima"):
        fwhm(_profile(samples))


def test_fwhm_boundary_peak_rejected():
    with pytest.raises(ValueError, match="boundary"):
        fwhm(_profile(np.linspace(0, 1, 12)))


def test_fwhm_constant_rejected():
    with pytest.raises(ValueError, match="constant"):
        fwhm(_profile(np.full(12, 0.4)))


def test_fwhm_never_falls_rejected():
    samples = np.array([0.0, 0.2, 1.0, 0.9, 0.9, 0.9, 0.9, 0.9])
    with pytest.raises(ValueError, match="right"):
        fwhm(_profile(samples))


def test_caliber_discrepancy_hand_cases():
    assert caliber_discrepancy(30.0, 25.0) == pytest.approx(20.0)
    assert caliber_discrepancy(25.0, 25.0) == 0.0
    assert caliber_discrepancy(20.0, 25.0) == pytest.approx(20.0)
    with pytest.raises(ValueError, match="positive"):
        caliber_discrepancy(20.0, 0.0)


# ------------------------------------------------------------------------ SNR


def _snr_scene():
    px = np.full((101, 101), 0.8, dtype=np.float32)
    faz = np.zeros((101, 101), dtype=bool)
    faz[50, 50] = faz[50, 51] = True
    px[50, 50], px[50, 51] = 0.1, 0.3
    return Angiogram(px, 30.0), faz


def test_snr_hand_case():
    img, faz = _snr_scene()
    expected = (0.8 - 0.2) / np.std([0.1, 0.3], ddof=1)
    assert parafoveal_snr(img, faz_mask=faz) == pytest.approx(expected, rel=1e-5)


def test_snr_annulus_spec_defaults():
    spec = AnnulusSpec(center_um=(0.0, 0.0))
    assert spec.outer_diameter_um == 2500.0
    assert spec.inner_diameter_um == 600.0
    with pytest.raises(ValueError):
        AnnulusSpec((0, 0), outer_diameter_um=500.0, inner_diameter_um=600.0)


def test_snr_annulus_must_fit():
    img, faz = _snr_scene()
    wide = AnnulusSpec(img.center_um, outer_diameter_um=9000.0, inner_diameter_um=600.0)
    with pytest.raises(ValueError, match="extent"):
        parafoveal_snr(img, annulus=wide, faz_mask=faz)


def test_snr_constant_faz_rejected():
    img, _ = _snr_scene()
    faz = np.zeros((101, 101), dtype=bool)
    faz[49:52, 49:52] = True  # all 0.8 except the two seeded pixels
    faz[50, 50] = faz[50, 51] = False
    with pytest.raises(ValueError, match="constant"):
        parafoveal_snr(img, faz_mask=faz)


def test_snr_tiny_faz_rejected():
    img, _ = _snr_scene()
    faz = np.zeros((101, 101), dtype=bool)
    faz[50, 50] = True
    with pytest.raises(ValueError, match="fewer than 2"):
        parafoveal_snr(img, faz_mask=faz)


def test_snr_default_faz_disc():
    rng = np.random.default_rng(35)
    px = np.clip(rng.uniform(0.3, 0.7, (101, 101)), 0, 1).astype(np.float32)
    img = Angiogram(px, 30.0)
    value = parafoveal_snr(img)  # central 0.6 mm disc by default
    assert np.isfinite(value)
