"""Front-to-back alpha compositing of projected Gaussians.

The compositing step is a single diffcore primitive, `Composite`, with an
analytic backward rule. Pixels are processed in square tiles against the
full depth-sorted Gaussian list; `tile_size=None` processes the whole
image at once and is the reference path.

For a pixel with composited weights w_k = a_k T_k (T_k the transmittance
in front of Gaussian k) and per-Gaussian scalar value v_k, the gradient
with respect to a_k is ``T_k v_k - S_k / (1 - a_k)`` where S_k sums
w_j v_j over the Gaussians behind k plus the background term.

"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core.errors import ContractViolation
from ..diffcore import Function, Tensor, as_tensor
from ..diffcore import functional as F
from .camera import Camera
from .geometry import covariance_from, project
from .sh import MAX_DEGREE, eval_sh


__all__ = [
    "rasterize",
    "composite",
    "Composite",
    "RenderOutput",
    "TRANSMITTANCE_CUTOFF",
    "DETERMINANT_FLOOR",
]

logger = logging.getLogger(__name__)


TRANSMITTANCE_CUTOFF = 1e-4
DETERMINANT_FLOOR = 1e-12


@dataclass(slots=True)
class RenderOutput:
    """Images produced by `rasterize`.

    Attributes
    ----------
    color : Tensor
        (H, W, 3) composited color including the background term.
    depth : Tensor
        (H, W) composited view-space depth, sum_k w_k z_k.
    accumulation : Tensor
        (H, W) sum of the composited weights.
    means2d : Tensor or None
        (m, 2) projected centers of the Gaussians listed in `visible`.
    visible : numpy.ndarray
        Cloud indices of the Gaussians in front of the camera.
    """
    color: Tensor
    depth: Tensor
    accumulation: Tensor
    means2d: Tensor | None = None
    visible: np.ndarray | None = None

    def normalized_depth(self, cutoff: float = 1e-6) -> np.ndarray:
        """Depth divided by accumulation; zero where accumulation <= cutoff."""
        acc = self.accumulation.values
        out = np.zeros_like(acc)
        covered = acc > cutoff
        out[covered] = self.depth.values[covered] / acc[covered]
        return out


def _tiles(height: int, width: int, tile_size: int | None):
    if tile_size is None:
        yield 0, height, 0, width
        return
    for v0 in range(0, height, tile_size):
        for u0 in range(0, width, tile_size):
            yield v0, min(v0 + tile_size, height), u0, min(u0 + tile_size, width)


class Composite(Function):
    """Alpha compositing of depth-sorted screen-space Gaussians.

    Inputs are, in front-to-back order: means2d (m, 2), conics (m, 2, 2)
    (inverse screen covariances), opacities (m,), colors (m, 3) and
    depths (m,). The output is an (H, W, 5) image holding color, depth
    and accumulation.
    """
    name = "composite"
    arity = 5

    def _radii(self, conics: np.ndarray, opacities: np.ndarray) -> np.ndarray:
        """Screen radius beyond which a Gaussian's alpha is below the floor."""
        a, c = conics[:, 0, 0], conics[:, 1, 1]
        b = 0.5 * (conics[:, 0, 1] + conics[:, 1, 0])
        smallest = 0.5 * (a + c) - np.sqrt((0.5 * (a - c)) ** 2 + b * b)
        with np.errstate(divide="ignore", invalid="ignore"):
            reach = 2.0 * np.log(opacities / self.alpha_floor) / smallest
        return np.where(opacities > self.alpha_floor, np.sqrt(np.maximum(reach, 0.0)), -1.0)

    def _keep(self, v0, v1, u0, u1) -> np.ndarray:
        if self.alpha_floor <= 0.0:
            return self.everything
        mx, my = self.means[:, 0], self.means[:, 1]
        du = np.maximum(np.maximum(u0 - mx, mx - (u1 - 1)), 0.0)
        dv = np.maximum(np.maximum(v0 - my, my - (v1 - 1)), 0.0)
        return np.nonzero((self.radii >= 0.0) & (du * du + dv * dv <= self.radii * self.radii))[0]

    def _terms(self, v0, v1, u0, u1, keep):
        v, u = np.mgrid[v0:v1, u0:u1]
        pu = u.reshape(-1, 1).astype(self.means.dtype)
        pv = v.reshape(-1, 1).astype(self.means.dtype)
        dx = pu - self.means[keep, 0][None, :]
        dy = pv - self.means[keep, 1][None, :]
        conics = self.conics[keep]
        a = conics[:, 0, 0]
        b = conics[:, 0, 1] + conics[:, 1, 0]
        c = conics[:, 1, 1]
        power = -0.5 * (a * dx * dx + b * dx * dy + c * dy * dy)
        gauss = np.exp(power)
        opac = self.opacities[keep][None, :]
        if self.alpha_floor > 0.0:
            gauss = np.where(opac * gauss < self.alpha_floor, 0.0, gauss)
        alpha = opac * gauss
        one_minus = 1.0 - alpha
        front = np.cumprod(one_minus, axis=1)
        trans = np.empty_like(alpha)
        trans[:, :1] = 1.0
        trans[:, 1:] = front[:, :-1]
        included = trans >= TRANSMITTANCE_CUTOFF
        weights = alpha * trans * included
        final = np.prod(np.where(included, one_minus, 1.0), axis=1)
        return dx, dy, (a, b, c), gauss, alpha, one_minus, trans, included, weights, final

    def forward(self, means2d, conics, opacities, colors, depths):
        m = means2d.shape[0]
        if (
            means2d.shape != (m, 2) or conics.shape != (m, 2, 2) or opacities.shape != (m,)
            or colors.shape != (m, 3) or depths.shape != (m,)
        ):
            raise ContractViolation(
                "'composite' needs means2d (m,2), conics (m,2,2), opacities (m,), "
                f"colors (m,3) and depths (m,); got {means2d.shape}, {conics.shape}, "
                f"{opacities.shape}, {colors.shape}, {depths.shape}"
            )
        self.means, self.conics, self.opacities = means2d, conics, opacities
        self.colors, self.depths = colors, depths
        self.everything = np.arange(m)
        self.radii = self._radii(conics, opacities) if self.alpha_floor > 0.0 else None
        background = np.asarray(self.background, dtype=means2d.dtype)

        out = np.empty((self.height, self.width, 5), dtype=means2d.dtype)
        for v0, v1, u0, u1 in _tiles(self.height, self.width, self.tile_size):
            keep = self._keep(v0, v1, u0, u1)
            *_, weights, final = self._terms(v0, v1, u0, u1, keep)
            block = np.empty((weights.shape[0], 5), dtype=out.dtype)
            block[:, :3] = (weights[:, :, None] * colors[keep][None, :, :]).sum(axis=1)
            block[:, :3] += final[:, None] * background[None, :]
            block[:, 3] = (weights * depths[keep][None, :]).sum(axis=1)
            block[:, 4] = weights.sum(axis=1)
            out[v0:v1, u0:u1] = block.reshape(v1 - v0, u1 - u0, 5)
        return out

    def backward(self, grad):
        m = self.means.shape[0]
        d_means = np.zeros((m, 2), dtype=grad.dtype)
        d_conics = np.zeros((m, 2, 2), dtype=grad.dtype)
        d_opac = np.zeros(m, dtype=grad.dtype)
        d_colors = np.zeros((m, 3), dtype=grad.dtype)
        d_depths = np.zeros(m, dtype=grad.dtype)
        background = np.asarray(self.background, dtype=grad.dtype)

        for v0, v1, u0, u1 in _tiles(self.height, self.width, self.tile_size):
            keep = self._keep(v0, v1, u0, u1)
            if len(keep) == 0:
                continue
            g = grad[v0:v1, u0:u1].reshape(-1, 5)
            g_color, g_depth, g_acc = g[:, :3], g[:, 3], g[:, 4]
            (dx, dy, (a, b, c), gauss, alpha, one_minus,
             trans, included, weights, final) = self._terms(v0, v1, u0, u1, keep)

            value = g_color @ self.colors[keep].T + g_depth[:, None] * self.depths[keep][None, :]
            value += g_acc[:, None]
            weighted = weights * value
            behind = np.cumsum(weighted[:, ::-1], axis=1)[:, ::-1] - weighted
            behind += (g_color @ background * final)[:, None]
            d_alpha = (trans * value - behind / one_minus) * included

            d_power = d_alpha * alpha
            d_opac[keep] += (d_alpha * gauss).sum(axis=0)
            d_conics[keep, 0, 0] += -0.5 * (d_power * dx * dx).sum(axis=0)
            cross = -0.5 * (d_power * dx * dy).sum(axis=0)
            d_conics[keep, 0, 1] += cross
            d_conics[keep, 1, 0] += cross
            d_conics[keep, 1, 1] += -0.5 * (d_power * dy * dy).sum(axis=0)
            d_means[keep, 0] += (d_power * (a * dx + 0.5 * b * dy)).sum(axis=0)
            d_means[keep, 1] += (d_power * (c * dy + 0.5 * b * dx)).sum(axis=0)
            d_colors[keep] += weights.T @ g_color
            d_depths[keep] += (weights * g_depth[:, None]).sum(axis=0)

        return d_means, d_conics, d_opac, d_colors, d_depths


def composite(
    means2d,
    conics,
    opacities,
    colors,
    depths,
    *,
    width: int,
    height: int,
    background: Sequence[float] = (0.0, 0.0, 0.0),
    tile_size: int | None = 16,
    alpha_floor: float = 0.0,
) -> Tensor:
    """Composites depth-sorted screen-space Gaussians into an (H, W, 5) image."""
    if tile_size is not None and tile_size < 1:
        raise ContractViolation(f"'tile_size' must be positive or None; got {tile_size!r}")
    if not 0.0 <= alpha_floor < 1.0:
        raise ContractViolation(f"'alpha_floor' must be in [0, 1); got {alpha_floor!r}")
    return Composite.apply(
        means2d, conics, opacities, colors, depths,
        width=int(width),
        height=int(height),
        background=tuple(float(c) for c in background),
        tile_size=tile_size,
        alpha_floor=float(alpha_floor),
    )


def rasterize(
    cloud,
    camera: Camera,
    sh,
    background: Sequence[float] = (0.0, 0.0, 0.0),
    *,
    tile_size: int | None = 16,
    alpha_floor: float = 0.0,
    track_means2d: bool = False,
) -> RenderOutput:
    """Renders color, depth and accumulation images of a Gaussian cloud.

    Parameters
    ----------
    cloud : GaussianCloud
    camera : Camera
    sh : Tensor
        (n, (degree + 1) ** 2, 3) coefficients for every Gaussian.
    background : sequence of float, optional
        Color added with the final transmittance.
    tile_size : int or None, optional
        Side of the pixel tiles; None renders the image as one tile.
    alpha_floor : float, optional
        Per-pixel alphas below this value are dropped and tiles skip
        Gaussians that cannot reach it. 0 keeps the exact model.
    track_means2d : bool, optional
        Retain the gradient of the projected centers (used by
        densification statistics).

    Returns
    -------
    RenderOutput
    """
    sh = as_tensor(sh)
    n = len(cloud)
    if sh.ndim != 3 or sh.shape[0] != n or sh.shape[2] != 3:
        raise ContractViolation(f"'sh' must have shape ({n}, K, 3); got {sh.shape}")
    degree = int(round(np.sqrt(sh.shape[1]))) - 1
    if (degree + 1) ** 2 != sh.shape[1] or degree > MAX_DEGREE:
        raise ContractViolation(f"'sh' holds {sh.shape[1]} coefficients; not a valid degree")

    cov3d = covariance_from(cloud.log_scales, cloud.rotations)
    projection = project(cov3d, camera, cloud.means)
    if track_means2d:
        projection.means2d.retain_grad = True

    cov = projection.cov2d.values
    det = cov[:, 0, 0] * cov[:, 1, 1] - cov[:, 0, 1] * cov[:, 1, 0]
    valid = np.nonzero(det >= DETERMINANT_FLOOR)[0]
    if len(valid) < len(det):
        logger.debug("skipped %d Gaussians with degenerate screen covariance", len(det) - len(valid))

    order = valid[np.argsort(projection.depths.values[valid], kind="stable")]
    index = projection.visible[order]

    offsets = cloud.means[index] - camera.center
    directions = offsets / F.sqrt(F.sum(offsets * offsets, axis=1, keepdims=True))
    colors = eval_sh(sh[index], directions, degree, check_norm=False)
    opacities = F.sigmoid(cloud.opacity_logits[index])

    image = composite(
        projection.means2d[order],
        F.inv(projection.cov2d[order]),
        opacities,
        colors,
        projection.depths[order],
        width=camera.width,
        height=camera.height,
        background=background,
        tile_size=tile_size,
        alpha_floor=alpha_floor,
    )
    return RenderOutput(
        color=image[:, :, 0:3],
        depth=image[:, :, 3],
        accumulation=image[:, :, 4],
        means2d=projection.means2d,
        visible=projection.visible,
    )
