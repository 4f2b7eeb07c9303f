"""Covariance assembly and the EWA projection to screen space.

Both operations are batched over Gaussians and built from diffcore
primitives, so gradients flow to means, scales and rotations.

"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..core.errors import ContractViolation
from ..diffcore import Tensor, as_tensor
from ..diffcore import functional as F
from .camera import NEAR_PLANE, Camera


__all__ = [
    "covariance_from",
    "rotation_from_quaternion",
    "project",
    "Projection",
    "COVARIANCE_FLOOR",
]

logger = logging.getLogger(__name__)


COVARIANCE_FLOOR = 0.3


def rotation_from_quaternion(q) -> Tensor:
    """(n, 4) quaternions (w, x, y, z) -> (n, 3, 3) rotation matrices.

    Raises
    ------
    ContractViolation
        If any quaternion has zero length.
    """
    q = as_tensor(q)
    norms = np.linalg.norm(q.values, axis=-1)
    if np.any(norms < 1e-12):
        raise ContractViolation(f"zero quaternion at index {int(np.argmin(norms))}")
    q = q / F.sqrt(F.sum(q * q, axis=1, keepdims=True))
    w, x, y, z = (q[:, i] for i in range(4))
    entries = [
        1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y),
    ]
    return F.reshape(F.stack(entries, axis=1), (-1, 3, 3))


def covariance_from(log_scales, rotations) -> Tensor:
    """Sigma = R diag(exp(s))^2 R^T for every Gaussian.

    Parameters
    ----------
    log_scales : Tensor
        (n, 3).
    rotations : Tensor
        (n, 4) quaternions, not necessarily normalized.

    Returns
    -------
    Tensor
        (n, 3, 3) symmetric positive semi-definite matrices.
    """
    log_scales, rotations = as_tensor(log_scales), as_tensor(rotations)
    if log_scales.ndim != 2 or log_scales.shape[1] != 3:
        raise ContractViolation(f"'log_scales' must be (n, 3); got {log_scales.shape}")
    if rotations.shape != (log_scales.shape[0], 4):
        raise ContractViolation(
            f"'rotations' must be ({log_scales.shape[0]}, 4); got {rotations.shape}"
        )
    r = rotation_from_quaternion(rotations)
    scales = F.exp(log_scales)
    m = r * F.reshape(scales, (-1, 1, 3))
    return m @ F.transpose(m, (0, 2, 1))


@dataclass(slots=True)
class Projection:
    """Screen-space parameters of the Gaussians in front of the camera.

    Attributes
    ----------
    visible : numpy.ndarray
        Indices into the cloud of the Gaussians kept, ascending.
    means2d : Tensor
        (m, 2) projected centers (u, v) in pixels.
    cov2d : Tensor
        (m, 2, 2) screen-space covariances including the floor.
    depths : Tensor
        (m,) view-space z.
    """
    visible: np.ndarray
    means2d: Tensor
    cov2d: Tensor
    depths: Tensor


def project(cov3d, camera: Camera, means, floor: float = COVARIANCE_FLOOR) -> Projection:
    """EWA projection: Sigma' = J W Sigma W^T J^T + floor * I.

    Gaussians with view-space z at or below the near plane are culled;
    they are absent from the returned projection.
    """
    cov3d, means = as_tensor(cov3d), as_tensor(means)
    rotation = camera.rotation
    z_values = camera.to_view(means.values)[:, 2] if len(means.values) else np.zeros(0)
    visible = np.nonzero(z_values > NEAR_PLANE)[0]
    culled = len(z_values) - len(visible)
    if culled:
        logger.debug("culled %d Gaussians behind the near plane", culled)

    means_v = means[visible]
    cov_v = cov3d[visible]
    view = means_v @ rotation.T + camera.translation
    x, y, z = view[:, 0], view[:, 1], view[:, 2]
    inv_z = 1.0 / z
    zeros = np.zeros(len(visible))

    jacobian = F.reshape(
        F.stack(
            [
                camera.fx * inv_z, zeros, -camera.fx * x * inv_z * inv_z,
                zeros, camera.fy * inv_z, -camera.fy * y * inv_z * inv_z,
            ],
            axis=1,
        ),
        (-1, 2, 3),
    )
    t = jacobian @ rotation
    cov2d = t @ cov_v @ F.transpose(t, (0, 2, 1)) + floor * np.eye(2)
    means2d = F.stack(
        [camera.fx * x * inv_z + camera.cx, camera.fy * y * inv_z + camera.cy],
        axis=1,
    )
    return Projection(visible=visible, means2d=means2d, cov2d=cov2d, depths=z)
