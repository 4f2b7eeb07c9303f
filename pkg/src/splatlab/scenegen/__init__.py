"""Deterministic synthetic scenes with appearance changes and occluders.

"""

from .spec import (
    LightSpot,
    AppearanceVariant,
    Primitive,
    OrbitSpecification,
    OccluderSpecification,
    SceneSpecification,
)
from .generator import ViewRender, SceneGenerator, generate, tone_curve, intersect, shade


__all__ = [
    "LightSpot",
    "AppearanceVariant",
    "Primitive",
    "OrbitSpecification",
    "OccluderSpecification",
    "SceneSpecification",
    "ViewRender",
    "SceneGenerator",
    "generate",
    "tone_curve",
    "intersect",
    "shade",
]
