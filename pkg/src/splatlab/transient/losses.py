"""Image losses: SSIM, the masked photometric loss and the mask penalty.

Images are (H, W, 3) tensors with values in [0, 1].

"""

from __future__ import annotations

import numpy as np

from ..core.errors import ContractViolation
from ..diffcore import Tensor, as_tensor
from ..diffcore import functional as F


__all__ = [
    "gaussian_window",
    "ssim",
    "l1",
    "masked_photometric_loss",
    "mask_regularizer",
    "SSIM_C1",
    "SSIM_C2",
]


SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    """Normalized (size, size) Gaussian kernel."""
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def _check_pair(a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape or a.ndim != 3 or a.shape[2] != 3:
        raise ContractViolation(
            f"images must share an (H, W, 3) shape; got {a.shape} and {b.shape}"
        )


def ssim(a, b, size: int = 11, sigma: float = 1.5) -> Tensor:
    """Mean structural similarity of two images.

    Local statistics use a Gaussian window with zero padding, computed
    per channel; C1 = 0.01 ** 2 and C2 = 0.03 ** 2.
    """
    a, b = as_tensor(a), as_tensor(b)
    _check_pair(a, b)
    h, w, _ = a.shape
    window = Tensor(gaussian_window(size, sigma)[None, None])
    planes = [a, b, a * a, b * b, a * b]
    stacked = F.reshape(
        F.transpose(F.stack(planes, axis=0), (0, 3, 1, 2)), (15, 1, h, w)
    )
    local = F.conv2d(stacked, window, np.zeros(1), padding=size // 2)
    local = F.reshape(local, (5, 3, h, w))
    mu_a, mu_b, aa, bb, ab = (local[i] for i in range(5))
    mu_aa, mu_bb, mu_ab = mu_a * mu_a, mu_b * mu_b, mu_a * mu_b
    var_a, var_b, cov = aa - mu_aa, bb - mu_bb, ab - mu_ab
    numerator = (2.0 * mu_ab + SSIM_C1) * (2.0 * cov + SSIM_C2)
    denominator = (mu_aa + mu_bb + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return F.mean(numerator / denominator)


def l1(a, b) -> Tensor:
    return F.mean(F.absolute(as_tensor(a) - b))


def masked_photometric_loss(reference, rendered, mask, lambda_image: float = 0.8) -> Tensor:
    """lambda * L1 + (1 - lambda) * (1 - SSIM), both on masked images.

    Parameters
    ----------
    reference, rendered : Tensor
        (H, W, 3) images.
    mask : Tensor or numpy.ndarray
        (H, W) visibility scores multiplied into both images.
    lambda_image : float, optional
    """
    if not 0.0 <= lambda_image <= 1.0:
        raise ContractViolation(f"'lambda_image' must be in [0, 1]; got {lambda_image!r}")
    reference, rendered, mask = as_tensor(reference), as_tensor(rendered), as_tensor(mask)
    _check_pair(reference, rendered)
    if mask.shape != reference.shape[:2]:
        raise ContractViolation(
            f"'mask' must have shape {reference.shape[:2]}; got {mask.shape}"
        )
    m = F.reshape(mask, mask.shape + (1,))
    masked_ref, masked_ren = reference * m, rendered * m
    return (
        lambda_image * l1(masked_ref, masked_ren)
        + (1.0 - lambda_image) * (1.0 - ssim(masked_ref, masked_ren))
    )


def mask_regularizer(mask) -> Tensor:
    """Mean of (1 - M) ** 2 over pixels."""
    residual = 1.0 - as_tensor(mask)
    return F.mean(residual * residual)
