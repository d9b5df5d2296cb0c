"""Unpaired two-domain dataset over the emitter's directory layout."""

from pathlib import Path

import torch

from .raster import load_raster


def _tensor(img):
    # copy: loaded pixels sit on a read-only buffer
    return torch.from_numpy(img.pixels.copy()).unsqueeze(0)  # 1 x H x W


class UnpairedFolders:
    """trainA (source domain) and trainB (target domain) held in memory.

    Phantom training sets are small by design; eager loading keeps sampling
    deterministic and cheap. ``steps_per_epoch`` is the larger domain size so
    every image is visited at least once per epoch in expectation.
    """

    def __init__(self, root):
        root = Path(root)
        self.files_a = sorted((root / "trainA").glob("*.raw"))
        self.files_b = sorted((root / "trainB").glob("*.raw"))
        if not self.files_a:
            raise ValueError(f"{root / 'trainA'} holds no training images")
        if not self.files_b:
            raise ValueError(f"{root / 'trainB'} holds no training images")
        self.a = [_tensor(load_raster(f)) for f in self.files_a]
        self.b = [_tensor(load_raster(f)) for f in self.files_b]

    @property
    def steps_per_epoch(self):
        return max(len(self.a), len(self.b))

    def sample(self, generator, batch_size=1):
        """One unpaired (a, b) batch drawn uniformly with the given RNG."""
        ia = torch.randint(len(self.a), (batch_size,), generator=generator)
        ib = torch.randint(len(self.b), (batch_size,), generator=generator)
        a = torch.stack([self.a[i] for i in ia.tolist()])
        b = torch.stack([self.b[i] for i in ib.tolist()])
        return a, b
