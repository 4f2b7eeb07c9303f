"""The depth correlation loss and the total training objective.

"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..core.errors import ContractViolation
from ..diffcore import Tensor, as_tensor
from ..diffcore import functional as F
from ..gaussians.rasterizer import RenderOutput
from ..transient.losses import mask_regularizer, masked_photometric_loss
from .spec import TrainConfig


__all__ = [
    "depth_pearson_loss",
    "total_loss",
    "LossParts",
    "VARIANCE_FLOOR",
]

logger = logging.getLogger(__name__)


VARIANCE_FLOOR = 1e-8


def depth_pearson_loss(rendered, estimate: np.ndarray, mask: np.ndarray, threshold: float = 0.5) -> Tensor:
    """1 - Pearson correlation between rendered and estimated depth.

    Only pixels with mask > threshold and a positive estimate take part.
    With fewer than two such pixels, or a variance below 1e-8 on either
    side, the loss is 0 and a warning is logged.
    """
    rendered = as_tensor(rendered)
    estimate = np.asarray(estimate, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if estimate.shape != rendered.shape or mask.shape != rendered.shape:
        raise ContractViolation(
            f"depth maps and mask must share shape {rendered.shape}; got "
            f"{estimate.shape} and {mask.shape}"
        )
    selected = (mask > threshold) & (estimate > 0.0)
    if np.count_nonzero(selected) < 2:
        logger.warning("depth loss skipped: fewer than 2 unmasked pixels")
        return Tensor(0.0)

    d = rendered[selected]
    e = estimate[selected]
    e_centered = e - e.mean()
    e_var = float(np.mean(e_centered * e_centered))
    d_centered = d - F.mean(d)
    d_var = F.mean(d_centered * d_centered)
    if e_var < VARIANCE_FLOOR or d_var.item() < VARIANCE_FLOOR:
        logger.warning("depth loss skipped: depth variance below %.0e", VARIANCE_FLOOR)
        return Tensor(0.0)
    rho = F.mean(d_centered * e_centered) / F.sqrt(d_var * e_var)
    return 1.0 - rho


@dataclass(slots=True)
class LossParts:
    """Scalar values of the loss components of one step."""
    image: float
    mask: float
    depth: float
    lambda_mask: float
    total: float


def total_loss(
    render: RenderOutput,
    reference,
    mask,
    depth_estimate: np.ndarray | None,
    config: TrainConfig,
    iteration: int,
) -> tuple[Tensor, LossParts]:
    """L^I + lambda^M(iteration) L^M + lambda^D L^D with warm-up staging.

    During warm-up the photometric loss sees M = 1 and the depth term is
    off; the mask penalty is always applied to the predicted mask.
    Disabling the mask (``use_mask=False``) sets M = 1 everywhere and
    drops the penalty.

    Returns
    -------
    Tensor
        The scalar objective.
    LossParts
    """
    reference = as_tensor(reference)
    mask = as_tensor(mask)
    warm = config.in_warmup(iteration)
    ones = np.ones(reference.shape[:2])

    photometric_mask = ones if warm or not config.use_mask else mask
    loss_image = masked_photometric_loss(
        reference, render.color, photometric_mask, config.lambda_image
    )

    lambda_mask = config.lambda_mask(iteration) if config.use_mask else 0.0
    loss_mask = mask_regularizer(mask) if config.use_mask else Tensor(0.0)

    loss_depth = Tensor(0.0)
    if not warm and config.use_depth and depth_estimate is not None:
        selection = mask.values if config.use_mask else ones
        loss_depth = depth_pearson_loss(
            render.depth, depth_estimate, selection, config.mask_threshold
        )

    total = loss_image + lambda_mask * loss_mask + config.lambda_depth * loss_depth
    parts = LossParts(
        image=loss_image.item(),
        mask=loss_mask.item(),
        depth=loss_depth.item(),
        lambda_mask=lambda_mask,
        total=total.item(),
    )
    return total, parts
