"""Triplane construction from a reference view.

The reference image is back-projected into a colored point cloud, the
points are splatted onto three axis-aligned planes with a two-sided
z-buffer, and a shared encoder-decoder turns each 6-channel plane image
into a feature map.

Plane layouts, in box-normalized coordinates (x~, y~, z~):

==== ====== ====== ============
name  rows   cols  dropped axis
==== ====== ====== ============
XY    y~     x~     z
YZ    z~     y~     x
ZX    x~     z~     y
==== ====== ====== ============

"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..core.errors import ContractViolation
from ..diffcore import Tensor, UNet, as_tensor
from ..diffcore import functional as F
from ..gaussians.camera import Camera
from .aabb import Aabb, normalize_points


__all__ = [
    "PLANES",
    "PointCloudRGB",
    "TriplaneColor",
    "TriplaneFeatures",
    "TriplaneEncoder",
    "backproject_masked",
    "splat_triplane_color",
    "sample_triplane",
]

logger = logging.getLogger(__name__)


# (name, row axis, column axis, dropped axis)
PLANES = (
    ("xy", 1, 0, 2),
    ("yz", 2, 1, 0),
    ("zx", 0, 2, 1),
)


@dataclass(slots=True)
class PointCloudRGB:
    positions: np.ndarray
    colors: np.ndarray

    def __post_init__(self) -> None:
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.colors = np.asarray(self.colors, dtype=np.float64).reshape(-1, 3)
        if len(self.positions) != len(self.colors):
            raise ContractViolation(
                f"{len(self.positions)} positions but {len(self.colors)} colors"
            )
        if not np.isfinite(self.positions).all():
            raise ContractViolation("'positions' must be finite")

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(slots=True)
class TriplaneColor:
    """Splatted plane images.

    Attributes
    ----------
    planes : numpy.ndarray
        (3, 6, R, R); channels 0-2 hold the forward (nearest from the
        low side) color and channels 3-5 the reverse color.
    occupancy : numpy.ndarray
        (3, R, R) booleans.
    """
    planes: np.ndarray
    occupancy: np.ndarray

    @property
    def resolution(self) -> int:
        return self.planes.shape[-1]


@dataclass(slots=True)
class TriplaneFeatures:
    """(3, F, R, R) feature grids plus the box they are normalized by."""
    grids: Tensor
    aabb: Aabb

    @property
    def resolution(self) -> int:
        return self.grids.shape[-1]

    @property
    def channels(self) -> int:
        return self.grids.shape[1]


def backproject_masked(
    image: np.ndarray,
    depth: np.ndarray,
    mask: np.ndarray,
    camera: Camera,
    threshold: float = 0.5,
    accumulation: np.ndarray | None = None,
    cutoff: float = 0.5,
) -> PointCloudRGB:
    """Lifts the confidently static pixels of a view into world space.

    Parameters
    ----------
    image : numpy.ndarray
        (H, W, 3) colors.
    depth : numpy.ndarray
        (H, W) view-space depth of each pixel.
    mask : numpy.ndarray
        (H, W) visibility scores; pixels at or below `threshold` are dropped.
    camera : Camera
    threshold : float, optional
    accumulation : numpy.ndarray, optional
        (H, W) rendered opacity; pixels at or below `cutoff` are dropped.
    cutoff : float, optional
    """
    image = np.asarray(image, dtype=np.float64)
    depth = np.asarray(depth, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    shape = camera.shape
    if image.shape != shape + (3,) or depth.shape != shape or mask.shape != shape:
        raise ContractViolation(
            f"image, depth and mask must be {shape} images; got "
            f"{image.shape}, {depth.shape}, {mask.shape}"
        )
    if not 0.0 < threshold < 1.0:
        raise ContractViolation(f"'threshold' must be in (0, 1); got {threshold!r}")

    keep = (mask > threshold) & (depth > 0.0)
    if accumulation is not None:
        keep &= np.asarray(accumulation) > cutoff
    origin, directions = camera.rays()
    positions = origin + depth[keep][:, None] * directions[keep]
    if not keep.any():
        logger.warning("back-projection kept no pixels; the triplane will be empty")
    return PointCloudRGB(positions, image[keep])


def _cells(t: np.ndarray, resolution: int) -> np.ndarray:
    return np.minimum(np.floor(t * resolution).astype(np.int64), resolution - 1)


def splat_triplane_color(points: PointCloudRGB, aabb: Aabb, resolution: int) -> TriplaneColor:
    """Two-sided z-buffer splatting onto the three planes.

    Points outside the box are dropped. In each cell the forward channels
    take the color of the point with the lowest coordinate along the
    dropped axis and the reverse channels the one with the highest; ties
    are broken by color so the result does not depend on point order.
    """
    if resolution < 4 or resolution & (resolution - 1):
        raise ContractViolation(f"'resolution' must be a power of two >= 4; got {resolution!r}")
    planes = np.zeros((3, 6, resolution, resolution))
    occupancy = np.zeros((3, resolution, resolution), dtype=bool)

    normalized, outside = normalize_points(points.positions, aabb)
    normalized, colors = normalized[~outside], points.colors[~outside]
    if len(normalized) == 0:
        return TriplaneColor(planes, occupancy)

    for p, (_, row_axis, col_axis, drop_axis) in enumerate(PLANES):
        rows = _cells(normalized[:, row_axis], resolution)
        cols = _cells(normalized[:, col_axis], resolution)
        cell = rows * resolution + cols
        along = normalized[:, drop_axis]
        for channel, key in ((0, along), (3, -along)):
            order = np.lexsort((colors[:, 2], colors[:, 1], colors[:, 0], key, cell))
            first = np.ones(len(order), dtype=bool)
            first[1:] = cell[order][1:] != cell[order][:-1]
            winners = order[first]
            flat = planes[p, channel:channel + 3].reshape(3, -1)
            flat[:, cell[winners]] = colors[winners].T
        occupancy[p].reshape(-1)[np.unique(cell)] = True
    return TriplaneColor(planes, occupancy)


class TriplaneEncoder(UNet):
    """Shared-weight encoder-decoder applied to each plane independently.

    The three planes form the batch axis, so they never mix.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        channels: int = 16,
        widths: tuple[int, int, int] = (16, 32, 32),
    ) -> None:
        super().__init__(6, channels, widths, rng)
        self.channels = channels

    def encode(self, color: TriplaneColor, aabb: Aabb) -> TriplaneFeatures:
        output, _ = self(Tensor(color.planes))
        return TriplaneFeatures(output, aabb)


def sample_triplane(features: TriplaneFeatures, positions) -> tuple[Tensor, np.ndarray]:
    """Sum of bilinear plane samples at world positions.

    Returns
    -------
    Tensor
        (n, F) summed features.
    numpy.ndarray
        (n,) True for positions outside the box.
    """
    positions = as_tensor(positions)
    aabb = features.aabb
    normalized = (positions - aabb.min_corner) / aabb.extent
    _, outside = normalize_points(positions.values, aabb)
    total = None
    for p, (_, row_axis, col_axis, _) in enumerate(PLANES):
        coords = F.stack([normalized[:, col_axis], normalized[:, row_axis]], axis=1)
        sample = F.grid_sample(features.grids[p], coords)
        total = sample if total is None else total + sample
    return total, outside
