"""Unpaired translation trainer for raster angiogram datasets."""

from .config import LossRecord, TrainConfig
from .features import export_pretrained_features
from .losses import loss_adversarial, loss_cycle, loss_identity
from .networks import Discriminator, Generator
from .raster import RasterImage, load_raster, save_raster
from .train import TrainResult, train
from .translate import apply_checkpoint, load_generator

__all__ = [
    "Discriminator",
    "Generator",
    "LossRecord",
    "RasterImage",
    "TrainConfig",
    "TrainResult",
    "apply_checkpoint",
    "export_pretrained_features",
    "load_generator",
    "load_raster",
    "loss_adversarial",
    "loss_cycle",
    "loss_identity",
    "save_raster",
    "train",
]
