"""Transient-object handling: visibility masks and masked image losses.

"""

from .parsing import ParsingNet, ParsingOutput, predict_mask
from .losses import (
    gaussian_window,
    ssim,
    l1,
    masked_photometric_loss,
    mask_regularizer,
)


__all__ = [
    "ParsingNet",
    "ParsingOutput",
    "predict_mask",
    "gaussian_window",
    "ssim",
    "l1",
    "masked_photometric_loss",
    "mask_regularizer",
]
