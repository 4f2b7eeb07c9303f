"""Image and mask quality measures.
"""

from __future__ import annotations

import numpy as np

from .core.errors import ContractViolation
from .diffcore import Tensor, no_grad
from .transient.losses import ssim as _ssim


# bound for logged PSNR so interval means stay finite
PSNR_CAP = 100.0


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractViolation(f"images must share a shape; got {a.shape} and {b.shape}")
    return a, b


def psnr(a, b, cap: float | None = None) -> float:
    """10 log10(1 / MSE); infinite for identical images unless `cap` bounds it."""
    a, b = _pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    # identical images have no finite PSNR
    value = float("inf") if mse == 0.0 else 10.0 * float(np.log10(1.0 / mse))
    return value if cap is None else min(value, cap)



def ssim(a, b) -> float:
    a, b = _pair(a, b)
    with no_grad():
        return _ssim(Tensor(a), Tensor(b)).item()


def mask_recall(predicted, gt_mask, threshold: float = 0.5) -> tuple[float, float]:
    """Share of occluder pixels scored below `threshold` and of static pixels above it.

    Either share is NaN when the ground truth has no pixels of that kind.
    """
    predicted, gt_mask = _pair(predicted, gt_mask)
    static = gt_mask > 0.5
    below = predicted < threshold
    above = predicted > threshold

    occluders = ~static
    occluder_recall = float(np.mean(below[occluders])) if occluders.any() else float("nan")
    static_recall = float(np.mean(above[static])) if static.any() else float("nan")
    return occluder_recall, static_recall
