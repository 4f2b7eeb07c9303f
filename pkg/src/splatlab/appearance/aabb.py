"""Axis-aligned boxes that confine triplane sampling.

"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from ..core.errors import ContractViolation


__all__ = [
    "Aabb",
    "normalize_points",
]


@dataclass(frozen=True, slots=True, eq=False)
class Aabb:
    """A box given by its min and max corners.

    Parameters
    ----------
    min_corner, max_corner : array_like
        3-vectors in world units with min < max componentwise.
    crop_ratio : float, optional
        The ratio used to shrink the box around its center when it was
        built from points; kept for reference, by default 1.
    """

    min_corner: np.ndarray
    max_corner: np.ndarray
    crop_ratio: float = 1.0

    def __post_init__(self) -> None:
        lo = np.array(self.min_corner, dtype=np.float64).reshape(-1)
        hi = np.array(self.max_corner, dtype=np.float64).reshape(-1)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ContractViolation(
                f"corners must be 3-vectors; got {lo.shape} and {hi.shape}"
            )
        if not np.all(lo < hi):
            raise ContractViolation(f"'min_corner' must be below 'max_corner'; got {lo} and {hi}")
        if not 0.0 < self.crop_ratio <= 1.0:
            raise ContractViolation(f"'crop_ratio' must be in (0, 1]; got {self.crop_ratio!r}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)

    def __repr__(self) -> str:
        return (
            f"Aabb(min_corner={self.min_corner.tolist()}, "
            f"max_corner={self.max_corner.tolist()}, crop_ratio={self.crop_ratio})"
        )

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, Aabb):
            return NotImplemented
        return (
            np.array_equal(self.min_corner, other.min_corner)
            and np.array_equal(self.max_corner, other.max_corner)
            and self.crop_ratio == other.crop_ratio
        )

    @classmethod
    def from_points(
        cls,
        points: np.ndarray,
        crop_ratio: float = 0.5,
        percentiles: tuple[float, float] = (1.0, 99.0),
    ) -> Aabb:
        """The box of the central `crop_ratio` of a point cloud.

        The box is centered on the midpoint of the points' percentile
        bounds, with half-extents equal to `crop_ratio` times theirs.
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if len(points) == 0:
            raise ContractViolation("cannot build a box from zero points")
        lo, hi = np.percentile(points, percentiles, axis=0)
        center = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo) * crop_ratio
        half = np.maximum(half, 1e-6)
        return cls(center - half, center + half, crop_ratio)

    @property
    def extent(self) -> np.ndarray:
        return self.max_corner - self.min_corner

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min_corner + self.max_corner)

    def to_dict(self) -> dict:
        return {
            "min_corner": self.min_corner.tolist(),
            "max_corner": self.max_corner.tolist(),
            "crop_ratio": self.crop_ratio,
        }


def normalize_points(points: np.ndarray, aabb: Aabb) -> tuple[np.ndarray, np.ndarray]:
    """Maps points into box coordinates.

    Returns
    -------
    normalized : numpy.ndarray
        (N, 3) values (p - min) / (max - min), not clamped.
    outside : numpy.ndarray
        (N,) True where any coordinate leaves [0, 1].
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    normalized = (points - aabb.min_corner) / aabb.extent
    outside = np.any((normalized < 0.0) | (normalized > 1.0), axis=1)
    return normalized, outside
