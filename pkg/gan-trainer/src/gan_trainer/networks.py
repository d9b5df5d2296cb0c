"""Reduced-width residual generator and patch discriminator.

Sized for 64-256 px single-channel angiograms. The generator predicts a
bounded residual on top of its input (out = clamp(x + tanh(head), 0, 1)), so
an untrained net is already close to the identity map and the cycle and
identity penalties stay meaningful from the first step.
"""

import torch
from torch import nn


class _ResBlock(nn.Module):
    def __init__(self, width):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(width, width, 3, padding=1, padding_mode="reflect"),
            nn.InstanceNorm2d(width),
            nn.ReLU(inplace=True),
            nn.Conv2d(width, width, 3, padding=1, padding_mode="reflect"),
            nn.InstanceNorm2d(width),
        )

    def forward(self, x):
        return x + self.body(x)


class Generator(nn.Module):
    def __init__(self, base_width=16, n_res_blocks=2):
        super().__init__()
        w = base_width
        layers = [
            nn.Conv2d(1, w, 7, padding=3, padding_mode="reflect"),
            nn.InstanceNorm2d(w),
            nn.ReLU(inplace=True),
            nn.Conv2d(w, 2 * w, 3, stride=2, padding=1),
            nn.InstanceNorm2d(2 * w),
            nn.ReLU(inplace=True),
        ]
        layers += [_ResBlock(2 * w) for _ in range(n_res_blocks)]
        layers += [
            nn.ConvTranspose2d(2 * w, w, 3, stride=2, padding=1, output_padding=1),
            nn.InstanceNorm2d(w),
            nn.ReLU(inplace=True),
            nn.Conv2d(w, 1, 7, padding=3, padding_mode="reflect"),
        ]
        self.head = nn.Sequential(*layers)
        # damp the residual at init so untrained output tracks the input
        with torch.no_grad():
            self.head[-1].weight.mul_(0.05)
            self.head[-1].bias.zero_()

    def forward(self, x):
        if x.shape[-1] % 2 or x.shape[-2] % 2:
            raise ValueError("generator expects even image sides "
                             f"(got {tuple(x.shape[-2:])})")
        return torch.clamp(x + torch.tanh(self.head(x)), 0.0, 1.0)


class Discriminator(nn.Module):
    """Patch classifier; scores in (0, 1) via a final sigmoid."""

    def __init__(self, base_width=16):
        super().__init__()
        w = base_width
        self.body = nn.Sequential(
            nn.Conv2d(1, w, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(w, 2 * w, 4, stride=2, padding=1),
            nn.InstanceNorm2d(2 * w),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(2 * w, 4 * w, 4, stride=1, padding=1),
            nn.InstanceNorm2d(4 * w),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(4 * w, 1, 4, stride=1, padding=1),
        )

    def forward(self, x):
        return torch.sigmoid(self.body(x))
