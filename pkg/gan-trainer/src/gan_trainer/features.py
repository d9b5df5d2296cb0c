"""Export Inception-v3 activations in the measurement tool's feature CSV format.

Each requested dimensionality maps to a fixed layer of the torchvision
Inception v3 graph; activations are spatially averaged so every image yields
one vector. Weights are never downloaded: they must already exist on disk,
either passed explicitly or named by GAN_TRAINER_INCEPTION_WEIGHTS.
"""

import csv
import os
from pathlib import Path

import numpy as np
import torch

_WEIGHTS_ENV = "GAN_TRAINER_INCEPTION_WEIGHTS"

# layer whose (spatially averaged) output has exactly this many channels
_DIM_NODES = {
    64: "maxpool1",
    192: "maxpool2",
    768: "Mixed_6e",
    2048: "avgpool",
}


def _resolve_weights(weights_path):
    path = weights_path or os.environ.get(_WEIGHTS_ENV)
    if not path or not Path(path).is_file():
        raise FileNotFoundError(
            "Inception v3 weights not found: pass weights_path or set "
            f"{_WEIGHTS_ENV} to a local state-dict file "
            f"(got {path!r})")
    return Path(path)


def _load_inception(weights_path):
    from torchvision.models import inception_v3

    net = inception_v3(weights=None, init_weights=False, aux_logits=True)
    state = torch.load(_resolve_weights(weights_path),
                       map_location="cpu", weights_only=True)
    net.load_state_dict(state)
    net.eval()
    return net


def _prepare(pixels):
    # grayscale [0,1] -> 3-channel 299x299 in [-1,1], the range the
    # torchvision weights were trained against
    # np.array copies: loaded pixels may sit on a read-only buffer
    x = torch.from_numpy(np.array(pixels, dtype=np.float32))
    x = x.unsqueeze(0).unsqueeze(0).expand(1, 3, -1, -1)
    x = torch.nn.functional.interpolate(
        x, size=(299, 299), mode="bilinear", align_corners=False)
    return x * 2.0 - 1.0


def _activations(net, pixels, dims):
    grabbed = {}
    hooks = []
    for dim in dims:
        module = getattr(net, _DIM_NODES[dim])
        hooks.append(module.register_forward_hook(
            lambda _m, _i, out, d=dim: grabbed.__setitem__(d, out)))
    try:
        with torch.no_grad():
            net(_prepare(pixels))
    finally:
        for h in hooks:
            h.remove()
    vectors = {}
    for dim, act in grabbed.items():
        flat = act.mean(dim=(2, 3)) if act.dim() == 4 else act.flatten(1)
        vectors[dim] = flat.squeeze(0).numpy().astype(np.float64)
    return vectors


def export_pretrained_features(image_dir, dims, out_dir, weights_path=None,
                               _loader=_load_inception):
    """Write one feature CSV per requested dimensionality.

    Returns a dict mapping dim -> written path. Files follow the
    ``extractor_id,d`` header convention with one repr-precision row per
    image, ordered by filename.
    """
    from .raster import load_raster

    dims = sorted(set(int(d) for d in dims))
    bad = [d for d in dims if d not in _DIM_NODES]
    if bad:
        raise ValueError(
            f"unsupported feature dims {bad}; choose from {sorted(_DIM_NODES)}")
    image_dir = Path(image_dir)
    sources = sorted(image_dir.glob("*.raw"))
    if not sources:
        raise ValueError(f"{image_dir} holds no raster images")

    net = _loader(weights_path)
    rows = {d: [] for d in dims}
    for src in sources:
        img = load_raster(src)
        vectors = _activations(net, img.pixels, dims)
        for d in dims:
            if vectors[d].shape != (d,):
                raise RuntimeError(
                    f"layer {_DIM_NODES[d]} produced {vectors[d].shape[0]} "
                    f"channels, expected {d}")
            rows[d].append(vectors[d])

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    for d in dims:
        path = out_dir / f"inception-v3-{d}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"inception-v3-{d}", d])
            for row in rows[d]:
                writer.writerow([repr(float(v)) for v in row])
        written[d] = path
    return written
