"""Pinhole cameras.

View space is +z forward, +x right, +y down. The center of pixel
(row v, column u) sits at image coordinates (u, v).

"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from ..core.errors import ContractViolation


__all__ = [
    "Camera",
    "NEAR_PLANE",
]


NEAR_PLANE = 0.01


@dataclass(frozen=True, slots=True, eq=False)
class Camera:
    """Intrinsics, image size and a rigid world-to-camera transform.

    Parameters
    ----------
    fx, fy, cx, cy : float
        Focal lengths and principal point in pixels.
    width, height : int
    world_to_camera : array_like
        4x4 rigid transform; its upper-left block is a rotation.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    world_to_camera: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        for name in ("fx", "fy"):
            value = getattr(self, name)
            if not value > 0:
                raise ContractViolation(f"'{name}' must be positive; got {value!r}")
        for name in ("width", "height"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ContractViolation(f"'{name}' must be a positive integer; got {value!r}")
            object.__setattr__(self, name, int(value))

        matrix = np.array(self.world_to_camera, dtype=np.float64)
        if matrix.shape != (4, 4):
            raise ContractViolation(
                f"'world_to_camera' must be 4x4; got shape {matrix.shape}"
            )
        rotation = matrix[:3, :3]
        if not np.allclose(rotation @ rotation.T, np.eye(3), rtol=0.0, atol=1e-9):
            raise ContractViolation("'world_to_camera' rotation is not orthonormal")
        if np.linalg.det(rotation) < 0:
            raise ContractViolation("'world_to_camera' rotation is a reflection")
        if not np.allclose(matrix[3], (0.0, 0.0, 0.0, 1.0), rtol=0.0, atol=1e-12):
            raise ContractViolation("'world_to_camera' last row must be (0, 0, 0, 1)")
        matrix.setflags(write=False)
        object.__setattr__(self, "world_to_camera", matrix)


    ################
    # Constructors #
    ################

    @classmethod
    def look_at(
        cls,
        eye: Any,
        target: Any,
        up: Any = (0.0, 0.0, 1.0),
        *,
        fx: float,
        fy: float | None = None,
        width: int,
        height: int,
    ) -> Camera:
        """A camera at `eye` looking at `target`, with `up` pointing up in the image."""
        eye = np.asarray(eye, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - eye
        forward /= np.linalg.norm(forward)
        right = np.cross(forward, np.asarray(up, dtype=np.float64))
        norm = np.linalg.norm(right)
        if norm < 1e-12:
            raise ContractViolation("'up' must not be parallel to the viewing direction")
        right /= norm
        down = np.cross(forward, right)
        rotation = np.stack([right, down, forward])
        matrix = np.eye(4)
        matrix[:3, :3] = rotation
        matrix[:3, 3] = -rotation @ eye
        return cls(
            fx=fx,
            fy=fx if fy is None else fy,
            cx=(width - 1) / 2,
            cy=(height - 1) / 2,
            width=width,
            height=height,
            world_to_camera=matrix,
        )

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> Camera:
        """Reads one `cameras.json` entry."""
        try:
            matrix = np.asarray(record["world_to_camera"], dtype=np.float64)
            if matrix.size != 16:
                raise ContractViolation(
                    f"'world_to_camera' must hold 16 values; got {matrix.size}"
                )
            return cls(
                fx=float(record["fx"]),
                fy=float(record["fy"]),
                cx=float(record["cx"]),
                cy=float(record["cy"]),
                width=record["w"],
                height=record["h"],
                world_to_camera=matrix.reshape(4, 4),
            )
        except KeyError as e:
            raise ContractViolation(f"camera record is missing {e}") from e


    ##############
    # Properties #
    ##############

    @property
    def rotation(self) -> np.ndarray:
        return self.world_to_camera[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.world_to_camera[:3, 3]

    @property
    def center(self) -> np.ndarray:
        """Camera position in world coordinates."""
        return -self.rotation.T @ self.translation

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width


    ###########
    # Methods #
    ###########

    def to_dict(self) -> dict[str, Any]:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "w": self.width,
            "h": self.height,
            "world_to_camera": [float(v) for v in self.world_to_camera.reshape(-1)],
        }

    def to_view(self, points: np.ndarray) -> np.ndarray:
        return points @ self.rotation.T + self.translation

    def to_world(self, points: np.ndarray) -> np.ndarray:
        return (points - self.translation) @ self.rotation

    def project(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Pixel coordinates (u, v) and view-space depth of world points."""
        view = self.to_view(np.asarray(points, dtype=np.float64))
        z = view[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.fx * view[..., 0] / z + self.cx
            v = self.fy * view[..., 1] / z + self.cy
        return np.stack([u, v], axis=-1), z

    def pixel_grid(self) -> np.ndarray:
        """(H, W, 2) array of pixel-center coordinates (u, v)."""
        v, u = np.mgrid[0:self.height, 0:self.width].astype(np.float64)
        return np.stack([u, v], axis=-1)

    def rays(self) -> tuple[np.ndarray, np.ndarray]:
        """World-space origin and (H, W, 3) view directions with unit z.

        A point at view-space depth z along pixel p's ray is
        ``origin + z * directions[p]``.
        """
        grid = self.pixel_grid()
        view_dirs = np.stack(
            [
                (grid[..., 0] - self.cx) / self.fx,
                (grid[..., 1] - self.cy) / self.fy,
                np.ones(self.shape),
            ],
            axis=-1,
        )
        return self.center, view_dirs @ self.rotation
