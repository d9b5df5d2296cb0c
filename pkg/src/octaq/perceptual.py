"""Set-level perceptual metrics between image collections.

Images are embedded by a deterministic built-in extractor (seeded random
filter bank + orthonormal projection, no learned weights) or by feature CSVs
produced elsewhere; sets are then compared by the Frechet distance between
fitted Gaussians and by the unbiased kernel (KID) estimator.

Feature CSV wire format: first line ``extractor_id,d``, then one row of d
comma-separated floats per image. Floats are written with repr precision, so
an export/import round trip is bit-equal.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

# seeds the filter bank and projection; changing it changes every embedding
_EXTRACTOR_SEED = 0x0C7A
_N_FILTERS = 128
_FILTER_SIZE = 7
_INPUT_SIZE = 64
_POOL_GRID = 4
_FLAT_DIM = _N_FILTERS * _POOL_GRID * _POOL_GRID  # 2048

BUILTIN_DIMS = (64, 192, 768, 2048)


@dataclass(frozen=True)
class FeatureSet:
    """N x d feature matrix plus the id of the extractor that produced it."""

    vectors: np.ndarray
    extractor_id: str

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("vectors must be a non-empty N x d matrix")
        if not np.all(np.isfinite(v)):
            raise ValueError("feature vectors contain non-finite entries")
        object.__setattr__(self, "vectors", v)

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def d(self):
        return self.vectors.shape[1]


@dataclass(frozen=True)
class GaussianFit:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError("mean must be length-d, cov d x d")
        asym = np.abs(cov - cov.T).max() if cov.size else 0.0
        if asym > 1e-12 * max(1.0, np.abs(cov).max()):
            raise ValueError(f"covariance asymmetric by {asym}")
        cov = 0.5 * (cov + cov.T)
        if cov.size and np.linalg.eigvalsh(cov).min() < -1e-8:
            raise ValueError("covariance has eigenvalues below -1e-8")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


def _resize_bilinear(data, size):
    n_rows, n_cols = data.shape
    rows = (np.arange(size) + 0.5) * n_rows / size - 0.5
    cols = (np.arange(size) + 0.5) * n_cols / size - 0.5
    grid = np.meshgrid(rows, cols, indexing="ij")
    return ndimage.map_coordinates(
        data, np.stack([g.ravel() for g in grid]), order=1, mode="nearest"
    ).reshape(size, size)


def _filter_bank():
    rng = np.random.default_rng(_EXTRACTOR_SEED)
    bank = rng.standard_normal((_N_FILTERS, _FILTER_SIZE, _FILTER_SIZE))
    bank -= bank.mean(axis=(1, 2), keepdims=True)
    bank /= np.linalg.norm(bank, axis=(1, 2), keepdims=True)
    return bank


_BANK = None
_PROJECTIONS = {}


def _projection(d):
    if d not in _PROJECTIONS:
        rng = np.random.default_rng((_EXTRACTOR_SEED, d))
        g = rng.standard_normal((_FLAT_DIM, d))
        q, _ = np.linalg.qr(g)
        # pin the sign convention so the embedding is platform-stable
        signs = np.sign(q[0])
        signs[signs == 0] = 1.0
        _PROJECTIONS[d] = q * signs
    return _PROJECTIONS[d]


def _patches(data):
    k = _FILTER_SIZE
    out = _INPUT_SIZE - k + 1
    windows = np.lib.stride_tricks.sliding_window_view(data, (k, k))
    return windows.reshape(out * out, k * k), out


def extract_features(images, d=64):
    """Embed angiograms with the deterministic built-in extractor.

    Each image is resized to 64x64 (bilinear), convolved with a fixed seeded
    bank of 128 zero-mean 7x7 filters, rectified, average-pooled on a 4x4
    grid, flattened, and projected to ``d`` dimensions through a fixed
    orthonormal matrix. Runs are deterministic to within 1e-6 across
    platforms.
    """
    global _BANK
    if not images:
        raise ValueError("no images given")
    if not (1 <= d <= _FLAT_DIM):
        raise ValueError(f"d must lie in [1, {_FLAT_DIM}], got {d}")
    if _BANK is None:
        _BANK = _filter_bank()
    kernels = _BANK.reshape(_N_FILTERS, -1).T
    proj = _projection(d)
    edges = np.linspace(0, _INPUT_SIZE - _FILTER_SIZE + 1, _POOL_GRID + 1).astype(int)
    rows = []
    for img in images:
        data = _resize_bilinear(img.pixels.astype(np.float64), _INPUT_SIZE)
        patches, out = _patches(data)
        maps = np.maximum(patches @ kernels, 0.0).reshape(out, out, _N_FILTERS)
        pooled = np.empty((_POOL_GRID, _POOL_GRID, _N_FILTERS))
        for i in range(_POOL_GRID):
            for j in range(_POOL_GRID):
                pooled[i, j] = maps[edges[i]:edges[i + 1], edges[j]:edges[j + 1]].mean((0, 1))
        rows.append(pooled.reshape(-1) @ proj)
    return FeatureSet(vectors=np.stack(rows), extractor_id=f"builtin-{d}")


def save_features(features, path):
    """Write a feature set as CSV (header ``extractor_id,d``; repr precision)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([features.extractor_id, features.d])
        for row in features.vectors:
            writer.writerow([repr(float(v)) for v in row])
    return path


def load_features(path):
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty feature file") from None
        if len(header) != 2:
            raise ValueError(f"{path}: header must be 'extractor_id,d'")
        extractor_id, d = header[0], int(header[1])
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != d:
                raise ValueError(f"{path}:{lineno}: expected {d} values, got {len(row)}")
            rows.append([float(v) for v in row])
    if not rows:
        raise ValueError(f"{path}: no feature rows")
    return FeatureSet(vectors=np.asarray(rows, dtype=np.float64), extractor_id=extractor_id)


def fit_gaussian(features):
    """Sample mean and (ddof=1) covariance of a feature set; needs N >= 2."""
    if features.n < 2:
        raise ValueError(f"need at least 2 vectors to fit, got {features.n}")
    v = features.vectors
    mean = v.mean(axis=0)
    cov = np.cov(v, rowvar=False, ddof=1).reshape(features.d, features.d)
    return GaussianFit(mean=mean, cov=0.5 * (cov + cov.T))


def sqrtm_psd(mat):
    """Symmetric PSD square root via eigendecomposition (eigenvalues clamped at 0)."""
    mat = np.asarray(mat, dtype=np.float64)
    vals, vecs = np.linalg.eigh(0.5 * (mat + mat.T))
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def frechet_distance(fit_a, fit_b):
    """Frechet distance between two Gaussian fits.

    ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^{1/2}), with the cross term
    computed as Tr((A Sb A)^{1/2}) for A = Sa^{1/2}, which keeps everything in
    symmetric eigendecompositions. Eigenvalues of the product more negative
    than -1e-6 of its norm raise; tiny negatives clamp to zero. The result is
    clamped to zero within a -1e-8 tolerance.
    """
    if fit_a.mean.size != fit_b.mean.size:
        raise ValueError("dimension mismatch between fits")
    a_half = sqrtm_psd(fit_a.cov)
    inner = a_half @ fit_b.cov @ a_half
    vals = np.linalg.eigvalsh(0.5 * (inner + inner.T))
    floor = -1e-6 * max(1.0, float(np.abs(vals).max()))
    if vals.min() < floor:
        raise ValueError(f"covariance product eigenvalue {vals.min()} below {floor}")
    trace_sqrt = np.sqrt(np.clip(vals, 0.0, None)).sum()
    diff = fit_a.mean - fit_b.mean
    fid = float(diff @ diff + np.trace(fit_a.cov) + np.trace(fit_b.cov) - 2.0 * trace_sqrt)
    if fid < -1e-8:
        raise ValueError(f"Frechet distance computed as {fid} < -1e-8")
    return max(fid, 0.0)


def _poly_kernel(x, y):
    return (x @ y.T / x.shape[1] + 1.0) ** 3


def kid_mmd2(features_x, features_y):
    """Unbiased MMD^2 with the cubic kernel k(u, v) = (u.v/d + 1)^3.

    Within-set sums run over ordered distinct pairs (n(n-1) terms); the cross
    term averages over all n*m pairs. Both sets need >= 2 vectors and equal
    dimension. The estimate is unbiased, hence can be negative.
    """
    if features_x.d != features_y.d:
        raise ValueError("dimension mismatch between feature sets")
    if features_x.n < 2 or features_y.n < 2:
        raise ValueError("KID needs at least 2 vectors per set")
    x, y = features_x.vectors, features_y.vectors
    n, m = x.shape[0], y.shape[0]
    kxx = _poly_kernel(x, x)
    kyy = _poly_kernel(y, y)
    kxy = _poly_kernel(x, y)
    sum_xx = kxx.sum() - np.trace(kxx)
    sum_yy = kyy.sum() - np.trace(kyy)
    return float(
        sum_xx / (n * (n - 1)) + sum_yy / (m * (m - 1)) - 2.0 * kxy.mean()
    )


def perceptual_report(original, generated, reference, dims=BUILTIN_DIMS):
    """Frechet and KID tables for two candidate sets against a reference.

    ``original``, ``generated`` and ``reference`` are lists of angiograms; a
    row is produced per embedding dimension. Feature sets of fewer than 2
    images are rejected by the underlying estimators.
    """
    report = {"set_sizes": {"original": len(original), "generated": len(generated),
                            "reference": len(reference)},
              "rows": []}
    for d in dims:
        feats = {name: extract_features(images, d)
                 for name, images in (("original", original), ("generated", generated),
                                      ("reference", reference))}
        ref_fit = fit_gaussian(feats["reference"])
        report["rows"].append({
            "extractor_id": feats["reference"].extractor_id,
            "d": d,
            "fid_original": frechet_distance(fit_gaussian(feats["original"]), ref_fit),
            "fid_generated": frechet_distance(fit_gaussian(feats["generated"]), ref_fit),
            "kid_original": kid_mmd2(feats["original"], feats["reference"]),
            "kid_generated": kid_mmd2(feats["generated"], feats["reference"]),
        })
    return report
