"""Apply a trained translator to a directory of raster images."""

import numpy as np
import torch

from pathlib import Path

from .networks import Generator
from .raster import RasterImage, load_raster, save_raster


def load_generator(checkpoint_path) -> Generator:
    """Rebuild the A-to-B generator stored in a training checkpoint."""
    payload = torch.load(checkpoint_path, map_location="cpu", weights_only=True)
    for key in ("arch", "g_ab"):
        if key not in payload:
            raise ValueError(
                f"{checkpoint_path} is not a training checkpoint "
                f"(missing {key!r})")
    arch = payload["arch"]
    net = Generator(arch["base_width"], arch["n_res_blocks"])
    net.load_state_dict(payload["g_ab"])
    net.eval()
    return net


def apply_checkpoint(checkpoint_path, in_dir, out_dir) -> list:
    """Translate every ``.raw`` image under in_dir, writing results to out_dir.

    Outputs keep the source filename, spacing, and origin; provenance is set
    to "generated" and pixel values are clamped to [0, 1] by the network.
    Returns the list of written paths.
    """
    in_dir = Path(in_dir)
    out_dir = Path(out_dir)
    sources = sorted(in_dir.glob("*.raw"))
    if not sources:
        raise ValueError(f"{in_dir} holds no raster images")
    net = load_generator(checkpoint_path)
    out_dir.mkdir(parents=True, exist_ok=True)

    written = []
    with torch.no_grad():
        for src in sources:
            img = load_raster(src)
            batch = torch.from_numpy(img.pixels.copy()).unsqueeze(0).unsqueeze(0)
            out = net(batch).squeeze(0).squeeze(0).numpy()
            result = RasterImage(
                pixels=np.ascontiguousarray(out, dtype=np.float32),
                spacing_um=img.spacing_um,
                origin_um=img.origin_um,
                provenance="generated",
            )
            dest = out_dir / src.name
            save_raster(result, dest)
            written.append(dest)
    return written
