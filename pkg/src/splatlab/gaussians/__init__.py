"""Gaussian scene representation, EWA projection and rasterization.

"""

from .camera import Camera, NEAR_PLANE
from .cloud import GaussianCloud, FEATURE_DIM
from .geometry import covariance_from, rotation_from_quaternion, project, Projection
from .sh import eval_sh, sh_basis, coefficient_count
from .rasterizer import rasterize, composite, RenderOutput
from .densify import DensifySpecification, DensifyStats, DensifyResult, densify_and_prune


__all__ = [
    "Camera",
    "NEAR_PLANE",
    "GaussianCloud",
    "FEATURE_DIM",
    "covariance_from",
    "rotation_from_quaternion",
    "project",
    "Projection",
    "eval_sh",
    "sh_basis",
    "coefficient_count",
    "rasterize",
    "composite",
    "RenderOutput",
    "DensifySpecification",
    "DensifyStats",
    "DensifyResult",
    "densify_and_prune",
]
