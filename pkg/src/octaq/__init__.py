"""Desk-scale OCTA measurement toolkit.

Synthetic retinal angiogram phantoms with known vessel geometry, acquisition
degradation, vessel-map biomarkers, caliber and SNR measurements, and
feature-space set metrics (FID/KID), tied together by the ``octaq`` CLI.
"""

from .flow import (
    AnnulusSpec,
    IntensityProfile,
    caliber_discrepancy,
    fwhm,
    intensity_profile,
    parafoveal_snr,
)
from .perceptual import (
    BUILTIN_DIMS,
    FeatureSet,
    GaussianFit,
    extract_features,
    fit_gaussian,
    frechet_distance,
    kid_mmd2,
    load_features,
    perceptual_report,
    save_features,
    sqrtm_psd,
)
from .phantom import (
    AugmentParams,
    DegradeParams,
    PhantomSpec,
    PhantomTruth,
    augment,
    degrade,
    emit_dataset,
    generate_phantom,
    sample_vessel_sites,
)
from .protocol import (
    ScanProtocol,
    is_nyquist_sampled,
    nyquist_spacing,
    required_aline_rate,
    sampling_spacing,
)
from .raster import (
    Angiogram,
    PhysicalRegion,
    crop_physical,
    load_angiogram,
    resample,
    save_angiogram,
)
from .vessel import (
    BiomarkerReport,
    FrangiParams,
    QuantifyConfig,
    VesselMaps,
    apply_hard_threshold,
    binarize_adaptive,
    compute_biomarkers,
    disc_mask,
    faz_threshold,
    frangi_vesselness,
    perimeter_map,
    quantify,
    skeletonize,
)

__version__ = "0.1.0"

__all__ = [
    "Angiogram",
    "AnnulusSpec",
    "AugmentParams",
    "BUILTIN_DIMS",
    "BiomarkerReport",
    "DegradeParams",
    "FeatureSet",
    "FrangiParams",
    "GaussianFit",
    "IntensityProfile",
    "PhantomSpec",
    "PhantomTruth",
    "PhysicalRegion",
    "QuantifyConfig",
    "ScanProtocol",
    "VesselMaps",
    "apply_hard_threshold",
    "augment",
    "binarize_adaptive",
    "caliber_discrepancy",
    "compute_biomarkers",
    "crop_physical",
    "degrade",
    "disc_mask",
    "emit_dataset",
    "extract_features",
    "faz_threshold",
    "fit_gaussian",
    "frangi_vesselness",
    "frechet_distance",
    "fwhm",
    "generate_phantom",
    "intensity_profile",
    "is_nyquist_sampled",
    "kid_mmd2",
    "load_angiogram",
    "load_features",
    "nyquist_spacing",
    "parafoveal_snr",
    "perceptual_report",
    "perimeter_map",
    "quantify",
    "required_aline_rate",
    "resample",
    "sample_vessel_sites",
    "sampling_spacing",
    "save_angiogram",
    "save_features",
    "skeletonize",
    "sqrtm_psd",
]
