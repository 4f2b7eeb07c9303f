"""Hierarchical appearance: global embeddings, triplanes and SH fusion.

"""

from .aabb import Aabb, normalize_points
from .triplane import (
    PLANES,
    PointCloudRGB,
    TriplaneColor,
    TriplaneFeatures,
    TriplaneEncoder,
    backproject_masked,
    splat_triplane_color,
    sample_triplane,
)
from .embedding import (
    EMBED_DIM,
    AppearanceContext,
    encode_global,
    sample_local_embedding,
    fuse_to_sh,
    blend_appearance,
    local_network,
    fusion_network,
)


__all__ = [
    "Aabb",
    "normalize_points",
    "PLANES",
    "PointCloudRGB",
    "TriplaneColor",
    "TriplaneFeatures",
    "TriplaneEncoder",
    "backproject_masked",
    "splat_triplane_color",
    "sample_triplane",
    "EMBED_DIM",
    "AppearanceContext",
    "encode_global",
    "sample_local_embedding",
    "fuse_to_sh",
    "blend_appearance",
    "local_network",
    "fusion_network",
]
