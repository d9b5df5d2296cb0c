"""Seeded synthetic superficial-plexus angiogram phantoms with ground truth.

A phantom scene is built outward from a foveal avascular zone: major arcades
enter from the border and sweep around the FAZ, taper and branch recursively
with Murray-law caliber bookkeeping (parent^3 ~= sum child^3), a terminal
capillary ring hugs the FAZ boundary, and a band-limited noise mesh fills the
remaining field at the requested capillary density. Vessels are rendered with
anti-aliased compact profiles and composed by maximum, so a truth centerline
pixel is always a local ridge of the noise-free render.

Degradation emulates a coarser acquisition of the same retina: optical blur,
exact area-average downsampling to the coarse grid, bicubic return to the
native grid, multiplicative speckle. Augmentation provides seeded blur /
gamma / noise / rotation jitter for training-set expansion.
"""

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import flow
from .raster import Angiogram, resample, save_angiogram

# render peaks: trees saturate, capillary-scale structure sits lower
_TREE_PEAK = 1.0
_RING_PEAK = 0.70
_MESH_PEAK = 0.55
_AA_BAND_PX = 1.0  # linear anti-aliasing band; profiles have compact support

_FAZ_RING_OFFSET_UM = 18.0
_FAZ_MESH_CLEAR_UM = 30.0
_FAZ_ARCADE_CLEAR_UM = 60.0
_FAZ_BRANCH_CLEAR_UM = 40.0


@dataclass(frozen=True)
class PhantomSpec:
    fov_um: float = 3000.0
    spacing_um: float = 12.24
    faz_radius_um: tuple = (250.0, 350.0)
    n_arcades: tuple = (4, 8)
    trunk_caliber_um: tuple = (25.0, 45.0)
    branch_depth: int = 4
    capillary_density: float = 0.35
    noise_floor: float = 0.05

    def __post_init__(self):
        if not (self.fov_um > 0 and self.spacing_um > 0):
            raise ValueError("fov_um and spacing_um must be positive")
        if self.fov_um / self.spacing_um < 16:
            raise ValueError("grid too small: fov must span at least 16 pixels")
        for name in ("faz_radius_um", "n_arcades", "trunk_caliber_um"):
            lo, hi = getattr(self, name)
            if not (0 <= lo <= hi):
                raise ValueError(f"{name} range ({lo}, {hi}) must satisfy 0 <= lo <= hi")
        if self.faz_radius_um[1] + _FAZ_ARCADE_CLEAR_UM >= self.fov_um / 2:
            raise ValueError("FAZ radius range does not fit inside the field of view")
        if not (isinstance(self.branch_depth, int) and self.branch_depth >= 0):
            raise ValueError("branch_depth must be a non-negative integer")
        if not (0.0 <= self.capillary_density <= 1.0):
            raise ValueError("capillary_density must lie in [0, 1]")
        if not (0.0 <= self.noise_floor < 1.0):
            raise ValueError("noise_floor must lie in [0, 1)")


@dataclass(frozen=True)
class PhantomTruth:
    """Ground truth aligned with the rendered grid.

    ``caliber_um`` and ``tangent`` are zero off the centerline; tangent rows
    hold unit (dx, dy). Truth is restricted to the branching tree (the mesh
    has no meaningful per-pixel caliber at these spacings).
    """

    centerline: np.ndarray
    caliber_um: np.ndarray
    faz_mask: np.ndarray
    tangent: np.ndarray
    faz_radius_um: float
    faz_center_um: tuple


@dataclass(frozen=True)
class DegradeParams:
    coarse_spacing_um: float = 22.86
    psf_sigma_um: float = 10.0
    speckle_sigma: float = 0.04

    def __post_init__(self):
        if not (self.coarse_spacing_um > 0):
            raise ValueError("coarse_spacing_um must be positive")
        if self.psf_sigma_um < 0 or self.speckle_sigma < 0:
            raise ValueError("psf_sigma_um and speckle_sigma must be non-negative")


@dataclass(frozen=True)
class AugmentParams:
    blur_sigma_px: tuple = (0.0, 1.0)
    gamma: tuple = (0.7, 1.4)
    noise_sigma: tuple = (0.0, 0.03)
    rotation_deg: tuple = (-180.0, 180.0)

    def __post_init__(self):
        checks = (
            ("blur_sigma_px", 0.0, 3.0),
            ("gamma", 0.5, 2.0),
            ("noise_sigma", 0.0, 0.1),
            ("rotation_deg", -180.0, 180.0),
        )
        for name, lo_bound, hi_bound in checks:
            lo, hi = getattr(self, name)
            if not (lo_bound <= lo <= hi <= hi_bound):
                raise ValueError(
                    f"{name} range ({lo}, {hi}) must lie within [{lo_bound}, {hi_bound}]"
                )


class _Scene:
    """Accumulates rendered fields and centerline truth on one pixel grid."""

    def __init__(self, n, spacing_um):
        self.n = n
        self.s = spacing_um
        self.field = np.zeros((n, n))
        self.centerline = np.zeros((n, n), dtype=bool)
        self.caliber = np.zeros((n, n), dtype=np.float32)
        self.tangent = np.zeros((n, n, 2), dtype=np.float32)

    def render_segment(self, a, b, ra_um, rb_um, peak):
        """Max-compose an anti-aliased capsule from a to b (physical um)."""
        s, n = self.s, self.n
        ax, ay = a[0] / s, a[1] / s
        bx, by = b[0] / s, b[1] / s
        r_hi = max(ra_um, rb_um) / s
        pad = r_hi + _AA_BAND_PX
        c0 = max(int(math.floor(min(ax, bx) - pad)), 0)
        c1 = min(int(math.ceil(max(ax, bx) + pad)), n - 1)
        r0 = max(int(math.floor(min(ay, by) - pad)), 0)
        r1 = min(int(math.ceil(max(ay, by) + pad)), n - 1)
        if c0 > c1 or r0 > r1:
            return
        xs = np.arange(c0, c1 + 1, dtype=np.float64)
        ys = np.arange(r0, r1 + 1, dtype=np.float64)
        px = xs[None, :] - ax
        py = ys[:, None] - ay
        dx, dy = bx - ax, by - ay
        seg2 = dx * dx + dy * dy
        if seg2 == 0:
            t = np.zeros((ys.size, xs.size))
        else:
            t = np.clip((px * dx + py * dy) / seg2, 0.0, 1.0)
        ddx = px - t * dx
        ddy = py - t * dy
        dist = np.sqrt(ddx * ddx + ddy * ddy)
        radius = (ra_um + t * (rb_um - ra_um)) / s
        cover = np.clip(0.5 + (radius - dist) / _AA_BAND_PX, 0.0, 1.0)
        window = self.field[r0 : r1 + 1, c0 : c1 + 1]
        np.maximum(window, peak * cover, out=window)

    def render_polyline(self, points, calibers_um, peak):
        for k in range(len(points) - 1):
            self.render_segment(
                points[k], points[k + 1], calibers_um[k] / 2, calibers_um[k + 1] / 2, peak
            )

    def mark_centerline(self, points, calibers_um):
        """Mark nearest pixels along a densely resampled polyline."""
        pts = np.asarray(points)
        cals = np.asarray(calibers_um)
        if len(pts) < 2:
            return
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        arc = np.concatenate([[0.0], np.cumsum(seg)])
        if arc[-1] <= 0:
            return
        step = 0.35 * self.s
        u = np.linspace(0.0, arc[-1], max(int(arc[-1] / step) + 1, 2))
        x = np.interp(u, arc, pts[:, 0])
        y = np.interp(u, arc, pts[:, 1])
        c = np.interp(u, arc, cals)
        # forward-difference tangents, unit length
        tx = np.gradient(x)
        ty = np.gradient(y)
        norm = np.hypot(tx, ty)
        norm[norm == 0] = 1.0
        cols = np.round(x / self.s).astype(int)
        rows = np.round(y / self.s).astype(int)
        ok = (cols >= 0) & (cols < self.n) & (rows >= 0) & (rows < self.n)
        self.centerline[rows[ok], cols[ok]] = True
        self.caliber[rows[ok], cols[ok]] = c[ok]
        self.tangent[rows[ok], cols[ok], 0] = (tx / norm)[ok]
        self.tangent[rows[ok], cols[ok], 1] = (ty / norm)[ok]


def perpendicular_offsets(tangent_xy):
    """Discrete (dr, dc) step perpendicular to a unit tangent (dx, dy)."""
    nx, ny = -tangent_xy[1], tangent_xy[0]
    m = max(abs(nx), abs(ny))
    if m == 0:
        return 0, 1
    return int(round(ny / m)), int(round(nx / m))


def _prune_truth(scene):
    """Keep only centerline pixels that are ridges of the rendered field."""
    field = scene.field
    n = scene.n
    rows, cols = np.nonzero(scene.centerline)
    for r, c in zip(rows, cols):
        if field[r, c] <= 0:
            scene.centerline[r, c] = False
            continue
        dr, dc = perpendicular_offsets(scene.tangent[r, c])
        for sign in (1, -1):
            rr, cc = r + sign * dr, c + sign * dc
            if 0 <= rr < n and 0 <= cc < n and field[rr, cc] > field[r, c] + 1e-12:
                scene.centerline[r, c] = False
                break
    off = ~scene.centerline
    scene.caliber[off] = 0.0
    scene.tangent[off] = 0.0


def _arcade_tree(rng, spec, r_faz, center):
    """Arcade trunks plus recursive Murray-tapered side branches."""
    branches = []
    lo, hi = spec.n_arcades
    n_arcades = int(rng.integers(lo, hi + 1)) if hi > 0 else 0
    fov = spec.fov_um
    for _ in range(n_arcades):
        theta0 = rng.uniform(0.0, 2.0 * math.pi)
        direction = -1.0 if rng.random() < 0.5 else 1.0
        sweep = rng.uniform(2.0, 3.5)
        rho_start = 0.60 * fov
        rho_end = r_faz + _FAZ_ARCADE_CLEAR_UM + rng.uniform(0.0, 120.0)
        amps = rng.uniform(0.0, 0.06, size=3) / np.arange(1, 4)
        phases = rng.uniform(0.0, 2.0 * math.pi, size=3)
        t = np.linspace(0.0, 1.0, 160)
        rho = rho_end + (rho_start - rho_end) * (1.0 - t) ** 1.6
        wobble = sum(a * np.sin(2.0 * math.pi * k * t + p)
                     for k, (a, p) in enumerate(zip(amps, phases), start=1))
        theta = theta0 + direction * sweep * t + wobble
        points = np.stack([center[0] + rho * np.cos(theta),
                           center[1] + rho * np.sin(theta)], axis=1)
        trunk = rng.uniform(*spec.trunk_caliber_um)
        calibers = trunk * (1.0 - 0.35 * t)
        branches.extend(
            _branch_recursively(rng, spec, points, calibers, spec.branch_depth,
                                r_faz, center)
        )
    return branches


def _branch_recursively(rng, spec, points, calibers, depth, r_faz, center):
    """Split off children and thin the parent by Murray's law at each fork."""
    calibers = calibers.copy()
    out = []
    if depth > 0:
        n_children = int(rng.integers(2, 4))
        for t_b in np.sort(rng.uniform(0.2, 0.9, size=n_children)):
            idx = int(t_b * (len(points) - 1))
            parent_cal = calibers[idx]
            if parent_cal < 10.0:
                continue
            ratio = rng.uniform(0.60, 0.78)
            child_cal = ratio * parent_cal
            calibers[idx:] *= (1.0 - ratio**3) ** (1.0 / 3.0)
            tangent = points[min(idx + 1, len(points) - 1)] - points[max(idx - 1, 0)]
            child = _grow_branch(rng, spec, points[idx], tangent, child_cal, r_faz,
                                 center, depth)
            if child is not None:
                out.extend(
                    _branch_recursively(rng, spec, child[0], child[1], depth - 1,
                                        r_faz, center)
                )
    out.append((points, calibers))
    return out


def _grow_branch(rng, spec, start, parent_tangent, caliber, r_faz, center, depth):
    """Random-heading walk away from the parent, pushed out of the FAZ."""
    if caliber < 8.0:
        return None
    norm = np.linalg.norm(parent_tangent)
    if norm == 0:
        return None
    heading = math.atan2(parent_tangent[1], parent_tangent[0])
    side = -1.0 if rng.random() < 0.5 else 1.0
    heading += side * rng.uniform(0.45, 1.2)
    length = rng.uniform(0.3, 0.6) * spec.fov_um * (0.75 ** (spec.branch_depth - depth))
    step = 25.0
    n_steps = max(int(length / step), 4)
    pts = [np.asarray(start, dtype=np.float64)]
    keep_out = r_faz + _FAZ_BRANCH_CLEAR_UM
    margin = 0.08 * spec.fov_um
    for _ in range(n_steps):
        heading += rng.uniform(-0.25, 0.25)
        q = pts[-1] + step * np.array([math.cos(heading), math.sin(heading)])
        radial = q - center
        dist = np.linalg.norm(radial)
        if dist < keep_out:
            q = center + radial / max(dist, 1e-9) * keep_out
            heading = math.atan2(*(q - pts[-1])[::-1]) if np.any(q != pts[-1]) else heading
        if not (-margin <= q[0] <= spec.fov_um + margin
                and -margin <= q[1] <= spec.fov_um + margin):
            break
        pts.append(q)
    if len(pts) < 4:
        return None
    pts = np.asarray(pts)
    t = np.linspace(0.0, 1.0, len(pts))
    return pts, caliber * (1.0 - 0.3 * t)


def _capillary_ring(r_faz, center):
    angles = np.linspace(0.0, 2.0 * math.pi, 256)
    r = r_faz + _FAZ_RING_OFFSET_UM
    points = np.stack([center[0] + r * np.cos(angles),
                       center[1] + r * np.sin(angles)], axis=1)
    return points, np.full(angles.size, 10.0)


def _capillary_mesh(rng, spec, scene, r_faz, center):
    """Band-limited noise thresholded to the requested density off the FAZ."""
    n, s = scene.n, scene.s
    white = rng.standard_normal((n, n))
    band = ndimage.gaussian_filter(white, 0.8) - ndimage.gaussian_filter(white, 2.2)
    cal_noise = ndimage.gaussian_filter(rng.standard_normal((n, n)), 3.0)
    span = cal_noise.max() - cal_noise.min()
    cal_map = 6.0 + 6.0 * (cal_noise - cal_noise.min()) / (span if span > 0 else 1.0)

    cols = np.arange(n) * s
    d2 = (cols[None, :] - center[0]) ** 2 + (cols[:, None] - center[1]) ** 2
    occupied = ndimage.maximum_filter(scene.field > 0, size=5)
    eligible = (d2 > (r_faz + _FAZ_MESH_CLEAR_UM) ** 2) & ~occupied
    if spec.capillary_density <= 0 or not eligible.any():
        return np.zeros((n, n))
    tau = np.quantile(band[eligible], 1.0 - spec.capillary_density)
    mesh = eligible & (band > tau)
    coverage = np.clip(cal_map / s, 0.0, 1.0)
    return np.where(mesh, _MESH_PEAK * coverage, 0.0)


def generate_phantom(spec=None, seed=0):
    """Build one seeded phantom; returns ``(Angiogram, PhantomTruth)``.

    Same (spec, seed) pairs produce bit-identical outputs. The image carries
    provenance ``"native"``; the truth centerline covers the arcade tree only.
    """
    spec = spec or PhantomSpec()
    rng = np.random.default_rng(seed)
    n = int(round(spec.fov_um / spec.spacing_um))
    scene = _Scene(n, spec.spacing_um)
    center = np.array([0.5 * (n - 1) * spec.spacing_um] * 2)

    r_faz = rng.uniform(*spec.faz_radius_um)
    for points, calibers in _arcade_tree(rng, spec, r_faz, center):
        scene.render_polyline(points, calibers, _TREE_PEAK)
        scene.mark_centerline(points, calibers)
    ring_pts, ring_cals = _capillary_ring(r_faz, center)
    scene.render_polyline(ring_pts, ring_cals, _RING_PEAK)
    mesh_field = _capillary_mesh(rng, spec, scene, r_faz, center)
    np.maximum(scene.field, mesh_field, out=scene.field)
    _prune_truth(scene)

    noise = rng.uniform(0.0, spec.noise_floor, size=(n, n)) if spec.noise_floor > 0 \
        else np.zeros((n, n))
    pixels = np.clip(scene.field + noise, 0.0, 1.0)

    rendered_any = bool((scene.field > 0).any())
    cols = np.arange(n) * spec.spacing_um
    d2 = (cols[None, :] - center[0]) ** 2 + (cols[:, None] - center[1]) ** 2
    faz_mask = (d2 <= r_faz**2) if rendered_any else np.zeros((n, n), dtype=bool)

    img = Angiogram(pixels, spec.spacing_um, (0.0, 0.0), "native")
    truth = PhantomTruth(
        centerline=scene.centerline,
        caliber_um=scene.caliber,
        faz_mask=faz_mask,
        tangent=scene.tangent,
        faz_radius_um=float(r_faz),
        faz_center_um=(float(center[0]), float(center[1])),
    )
    return img, truth


def degrade(img, params=None, seed=0):
    """Coarse-acquisition emulation on the native grid.

    Gaussian PSF blur, exact area-average to the coarse spacing, bicubic
    interpolation back onto the original pixel grid, multiplicative speckle
    ``1 + N(0, sigma)``, clamp. Output shape, spacing and origin match the
    input; provenance becomes ``"degraded"``.
    """
    params = params or DegradeParams()
    if params.coarse_spacing_um <= img.spacing_um:
        raise ValueError(
            f"coarse spacing {params.coarse_spacing_um} um must exceed native "
            f"spacing {img.spacing_um} um"
        )
    rng = np.random.default_rng(seed)
    data = img.pixels.astype(np.float64)
    if params.psf_sigma_um > 0:
        data = ndimage.gaussian_filter(data, params.psf_sigma_um / img.spacing_um)
    blurred = Angiogram(np.clip(data, 0.0, 1.0), img.spacing_um, img.origin_um,
                        img.provenance)
    coarse = resample(blurred, params.coarse_spacing_um, "area_average")
    # sample the coarse image back at the original pixel centers so the output
    # grid matches the input exactly
    rows = (np.arange(img.height) * img.spacing_um + img.origin_um[1]
            - coarse.origin_um[1]) / coarse.spacing_um
    cols = (np.arange(img.width) * img.spacing_um + img.origin_um[0]
            - coarse.origin_um[0]) / coarse.spacing_um
    grid = np.meshgrid(rows, cols, indexing="ij")
    up = ndimage.map_coordinates(
        coarse.pixels.astype(np.float64),
        np.stack([g.ravel() for g in grid]),
        order=3,
        mode="nearest",
    ).reshape(img.height, img.width)
    speckled = up * (1.0 + rng.normal(0.0, params.speckle_sigma, size=up.shape)) \
        if params.speckle_sigma > 0 else up
    return Angiogram(np.clip(speckled, 0.0, 1.0), img.spacing_um, img.origin_um,
                     "degraded")


def augment(img, params=None, seed=0):
    """One seeded augmentation: blur, gamma, additive noise, then rotation.

    All four factors are drawn uniformly from the parameter ranges; rotation
    uses bilinear interpolation with zero fill in the exposed corners.
    """
    params = params or AugmentParams()
    rng = np.random.default_rng(seed)
    blur = rng.uniform(*params.blur_sigma_px)
    gamma = rng.uniform(*params.gamma)
    noise_sigma = rng.uniform(*params.noise_sigma)
    angle = rng.uniform(*params.rotation_deg)

    data = img.pixels.astype(np.float64)
    if blur > 0:
        data = ndimage.gaussian_filter(data, blur)
    data = np.clip(data, 0.0, 1.0) ** gamma
    if noise_sigma > 0:
        data = data + rng.normal(0.0, noise_sigma, size=data.shape)
    data = np.clip(data, 0.0, 1.0)
    if angle != 0.0:
        data = ndimage.rotate(data, angle, reshape=False, order=1,
                              mode="constant", cval=0.0)
        data = np.clip(data, 0.0, 1.0)
    return Angiogram(data, img.spacing_um, img.origin_um, img.provenance)


def _subseed(seed, *tags):
    """Stable derived seed for one file of a dataset."""
    material = [np.uint64(seed & 0xFFFFFFFFFFFFFFFF)]
    for t in tags:
        if isinstance(t, str):
            material.extend(np.frombuffer(t.encode().ljust(8, b"\0")[:8], dtype=np.uint64))
        else:
            material.append(np.uint64(t))
    return int(np.random.SeedSequence([int(m) for m in material]).generate_state(1)[0])


def emit_dataset(spec, n_train, n_test, augment_factor, out_dir, seed=0,
                 degrade_params=None, augment_params=None):
    """Write an unpaired two-domain dataset and return its manifest.

    Layout: ``trainA``/``testA`` hold degraded acquisitions, ``trainB``/
    ``testB`` native ones. Each native training phantom contributes one base
    image plus ``augment_factor`` augmented copies per domain, so each train
    directory holds ``n_train * (1 + augment_factor)`` images; test splits are
    unaugmented pairs. Files are raw-float with sidecars; the manifest is also
    written to ``out_dir/manifest.json``. Re-runs with the same arguments
    produce identical bytes.
    """
    if n_train < 0 or n_test < 0 or augment_factor < 0:
        raise ValueError("counts must be non-negative")
    spec = spec or PhantomSpec()
    degrade_params = degrade_params or DegradeParams()
    augment_params = augment_params or AugmentParams()
    out_dir = Path(out_dir)
    for sub in ("trainA", "trainB", "testA", "testB"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)

    files = []

    def emit(image, subdir, name, split, role, phantom_seed, augment_seed=None):
        rel = f"{subdir}/{name}.raw"
        save_angiogram(image, out_dir / rel, format="raw")
        files.append({
            "path": rel,
            "domain": "A" if subdir.endswith("A") else "B",
            "split": split,
            "role": role,
            "provenance": image.provenance,
            "phantom_seed": phantom_seed,
            "augment_seed": augment_seed,
        })

    for split, count, base_tag in (("train", n_train, "train"), ("test", n_test, "test")):
        for i in range(count):
            p_seed = _subseed(seed, base_tag, i)
            native, _ = generate_phantom(spec, p_seed)
            degraded = degrade(native, degrade_params, _subseed(seed, base_tag + "-deg", i))
            emit(native, f"{split}B", f"{base_tag}_{i:04d}", split, "native", p_seed)
            emit(degraded, f"{split}A", f"{base_tag}_{i:04d}", split, "degraded", p_seed)
            if split == "train":
                for k in range(augment_factor):
                    a_seed = _subseed(seed, "aug", i, k)
                    emit(augment(native, augment_params, a_seed), "trainB",
                         f"{base_tag}_{i:04d}_aug{k:02d}", split, "augmented",
                         p_seed, a_seed)
                    emit(augment(degraded, augment_params, a_seed), "trainA",
                         f"{base_tag}_{i:04d}_aug{k:02d}", split, "augmented",
                         p_seed, a_seed)

    manifest = {
        "seed": seed,
        "spec": asdict(spec),
        "degrade": asdict(degrade_params),
        "augment": asdict(augment_params),
        "counts": {
            "n_train": n_train,
            "n_test": n_test,
            "augment_factor": augment_factor,
            "per_train_domain": n_train * (1 + augment_factor),
        },
        "files": files,
    }
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    (out_dir / "manifest.json").write_text(text)
    # hand back exactly what was persisted (tuples become lists etc.)
    return json.loads(text)


def sample_vessel_sites(img, truth, n_sites, seed=0, min_caliber_um=24.0):
    """Seeded perpendicular profile sites on wide truth centerline pixels.

    Each site is a segment crossing the vessel at a right angle, long enough
    to reach baseline on both sides, oversampled four-fold relative to the
    pixel spacing. Candidates are validated by running the FWHM readout on
    ``img``; sites where it fails or disagrees wildly with the truth caliber
    are rejected. Raises if fewer than ``n_sites`` valid sites exist.
    """
    rng = np.random.default_rng(seed)
    rows, cols = np.nonzero(truth.centerline & (truth.caliber_um >= min_caliber_um))
    if rows.size == 0:
        raise ValueError("no centerline pixels at or above the caliber floor")
    order = rng.permutation(rows.size)
    ox, oy = img.origin_um
    ex, ey = img.extent_um
    sites = []
    for idx in order:
        r, c = int(rows[idx]), int(cols[idx])
        cal = float(truth.caliber_um[r, c])
        tx, ty = truth.tangent[r, c]
        nx, ny = -float(ty), float(tx)
        half = max(4.0 * cal, 80.0)
        x0, y0 = ox + c * img.spacing_um - half * nx, oy + r * img.spacing_um - half * ny
        x1, y1 = ox + c * img.spacing_um + half * nx, oy + r * img.spacing_um + half * ny
        if not (ox <= x0 <= ox + ex and ox <= x1 <= ox + ex
                and oy <= y0 <= oy + ey and oy <= y1 <= oy + ey):
            continue
        n_samples = max(int(math.ceil(2 * half / (img.spacing_um / 4.0))) + 1, 16)
        try:
            width = flow.fwhm(flow.intensity_profile(img, (x0, y0), (x1, y1), n_samples))
        except ValueError:
            continue
        if not (0.5 * cal <= width <= 3.0 * cal):
            continue
        sites.append({
            "p0_um": [x0, y0],
            "p1_um": [x1, y1],
            "n_samples": n_samples,
            "caliber_um": cal,
        })
        if len(sites) == n_sites:
            return sites
    raise ValueError(f"only {len(sites)} of {n_sites} requested sites validated")
