"""Appearance contexts and their fusion into SH coefficients.

"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.errors import ContractViolation
from ..diffcore import MLP, Tensor, as_tensor
from ..diffcore import functional as F
from ..gaussians.sh import coefficient_count
from .triplane import TriplaneFeatures, sample_triplane


__all__ = [
    "EMBED_DIM",
    "AppearanceContext",
    "encode_global",
    "sample_local_embedding",
    "fuse_to_sh",
    "blend_appearance",
    "local_network",
    "fusion_network",
]


EMBED_DIM = 16


@dataclass(slots=True)
class AppearanceContext:
    """Everything one reference image contributes to Gaussian colors.

    Attributes
    ----------
    global_embedding : Tensor
        (EMBED_DIM,) scene-wide appearance code.
    triplane : TriplaneFeatures or None
        None while local appearance is disabled (warm-up); every
        Gaussian then uses `fallback`.
    fallback : Tensor
        (EMBED_DIM,) local embedding of Gaussians outside the box.
    """
    global_embedding: Tensor
    triplane: TriplaneFeatures | None
    fallback: Tensor


def local_network(rng: np.random.Generator, channels: int = 16) -> MLP:
    """The two-layer map from summed triplane features to Emb^l."""
    return MLP((channels, 2 * EMBED_DIM, EMBED_DIM), rng)


def fusion_network(rng: np.random.Generator, degree: int, feature_dim: int) -> MLP:
    """The three-layer map from (Emb^g, Emb^l, f^in) to SH coefficients."""
    width = 2 * EMBED_DIM + feature_dim
    return MLP((width, width, width, 3 * coefficient_count(degree)), rng)


def encode_global(image: np.ndarray, net) -> Tensor:
    """Emb^g of an image, from the parsing network's bottleneck."""
    return net.parse(image).global_embedding


def _broadcast_rows(vector, count: int) -> Tensor:
    vector = as_tensor(vector)
    return F.reshape(vector, (1, -1)) + np.zeros((count, 1))


def sample_local_embedding(means, ctx: AppearanceContext, local: MLP) -> Tensor:
    """Per-Gaussian local embeddings.

    Inside the box, the summed triplane features go through `local`;
    outside it (or without a triplane) the embedding is exactly the
    context's fallback vector.
    """
    means = as_tensor(means)
    count = means.shape[0]
    if ctx.triplane is None:
        return _broadcast_rows(ctx.fallback, count)
    summed, outside = sample_triplane(ctx.triplane, means)
    embedding = local(summed)
    return F.where(outside[:, None], F.reshape(ctx.fallback, (1, -1)), embedding)


def fuse_to_sh(global_embedding, local_embedding, intrinsic, fusion: MLP, degree: int) -> Tensor:
    """Decodes (n, K, 3) SH coefficients with a network shared by all Gaussians."""
    local_embedding, intrinsic = as_tensor(local_embedding), as_tensor(intrinsic)
    count = intrinsic.shape[0]
    if local_embedding.shape[0] != count:
        raise ContractViolation(
            f"{local_embedding.shape[0]} local embeddings for {count} Gaussians"
        )
    inputs = F.concat(
        [_broadcast_rows(global_embedding, count), local_embedding, intrinsic], axis=1
    )
    if inputs.shape[1] != fusion.widths[0]:
        raise ContractViolation(
            f"fusion input width is {fusion.widths[0]}; got {inputs.shape[1]}"
        )
    k = coefficient_count(degree)
    return F.reshape(fusion(inputs), (count, k, 3))


def _mix(a: Tensor, b: Tensor, alpha: float) -> Tensor:
    return Tensor((1.0 - alpha) * a.values + alpha * b.values)


def blend_appearance(
    first: AppearanceContext,
    second: AppearanceContext,
    alpha: float,
) -> AppearanceContext:
    """The convex combination (1 - alpha) * first + alpha * second.

    The endpoints return the corresponding context itself.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ContractViolation(f"'alpha' must be in [0, 1]; got {alpha!r}")
    if (first.triplane is None) != (second.triplane is None):
        raise ContractViolation("cannot blend a context with a triplane and one without")
    if first.triplane is not None:
        if first.triplane.grids.shape != second.triplane.grids.shape:
            raise ContractViolation(
                f"triplane grids differ: {first.triplane.grids.shape} and "
                f"{second.triplane.grids.shape}"
            )
        if first.triplane.aabb != second.triplane.aabb:
            raise ContractViolation("triplanes are normalized by different boxes")
    if alpha == 0.0:
        return first
    if alpha == 1.0:
        return second

    triplane = None
    if first.triplane is not None:
        triplane = TriplaneFeatures(
            _mix(first.triplane.grids, second.triplane.grids, alpha),
            first.triplane.aabb,
        )
    return AppearanceContext(
        global_embedding=_mix(first.global_embedding, second.global_embedding, alpha),
        triplane=triplane,
        fallback=_mix(first.fallback, second.fallback, alpha),
    )
