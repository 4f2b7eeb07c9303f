"""The trainable scene: Gaussians plus the appearance and parsing networks.

"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..appearance import (
    EMBED_DIM,
    Aabb,
    AppearanceContext,
    TriplaneEncoder,
    backproject_masked,
    fuse_to_sh,
    fusion_network,
    local_network,
    sample_local_embedding,
    splat_triplane_color,
)
from ..core.errors import CheckpointError
from ..diffcore import Module, Tensor, no_grad
from ..gaussians import Camera, GaussianCloud, RenderOutput, coefficient_count, rasterize
from ..transient import ParsingNet
from .spec import TrainConfig


__all__ = [
    "WildGaussianModel",
    "ContextResult",
]

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class ContextResult:
    context: AppearanceContext
    mask: Tensor


class WildGaussianModel(Module):
    """A Gaussian cloud whose colors are decoded per reference image.

    Parameters
    ----------
    cloud : GaussianCloud
    config : TrainConfig
    aabb : Aabb
        The box that normalizes triplane sampling.
    rng : numpy.random.Generator
        Source of the network initializations.

    Notes
    -----
    `parameters()` lists the network weights and the fallback vector;
    the Gaussian parameters are reached through `cloud`.
    """

    def __init__(
        self,
        cloud: GaussianCloud,
        config: TrainConfig,
        aabb: Aabb,
        rng: np.random.Generator,
    ) -> None:
        self.cloud = cloud
        self.config = config
        self.aabb = aabb
        self.parser = ParsingNet(rng, embed_dim=EMBED_DIM)
        self.triplane_encoder = TriplaneEncoder(rng, channels=config.triplane_channels)
        self.local = local_network(rng, channels=config.triplane_channels)
        self.fusion = fusion_network(rng, config.sh_degree, cloud.feature_dim)
        self.fallback = Tensor(np.zeros(EMBED_DIM), requires_grad=True, name="fallback")

    def __repr__(self) -> str:
        return f"WildGaussianModel(gaussians={len(self.cloud)}, sh_degree={self.config.sh_degree})"


    ###########
    # Methods #
    ###########

    def build_context(
        self,
        image: np.ndarray,
        camera: Camera,
        *,
        local: bool = True,
    ) -> ContextResult:
        """Parses a reference image into an appearance context.

        Parameters
        ----------
        image : numpy.ndarray
            (H, W, 3) reference image.
        camera : Camera
            The camera the reference image was taken with; drives the
            back-projection that builds the triplane.
        local : bool, optional
            False builds a context without a triplane (warm-up).
        """
        parsed = self.parser.parse(image)
        global_embedding = parsed.global_embedding
        if not self.config.use_global:
            global_embedding = Tensor(np.zeros(EMBED_DIM))

        triplane = None
        if local and self.config.use_local:
            mask = parsed.mask.values if self.config.use_mask else np.ones(camera.shape)
            depth, accumulation = self.render_depth(camera)
            points = backproject_masked(
                image,
                depth,
                mask,
                camera,
                threshold=self.config.mask_threshold,
                accumulation=accumulation,
                cutoff=self.config.backproject_cutoff,
            )
            color = splat_triplane_color(points, self.aabb, self.config.triplane_resolution)
            if not self.config.reverse_projection:
                color.planes[:, 3:] = 0.0
            triplane = self.triplane_encoder.encode(color, self.aabb)

        context = AppearanceContext(global_embedding, triplane, self.fallback)
        return ContextResult(context=context, mask=parsed.mask)

    def render_depth(self, camera: Camera) -> tuple[np.ndarray, np.ndarray]:
        """Untaped normalized depth and accumulation of the current cloud."""
        k = coefficient_count(self.config.sh_degree)
        with no_grad():
            out = rasterize(
                self.cloud,
                camera,
                np.zeros((len(self.cloud), k, 3)),
                tile_size=self.config.tile_size,
                alpha_floor=self.config.alpha_floor,
            )
        return out.normalized_depth(), out.accumulation.values

    def sh(self, context: AppearanceContext) -> Tensor:
        local = sample_local_embedding(self.cloud.means, context, self.local)
        intrinsic = self.cloud.features
        if not self.config.use_intrinsic:
            intrinsic = Tensor(np.zeros(intrinsic.shape))
        return fuse_to_sh(
            context.global_embedding, local, intrinsic, self.fusion, self.config.sh_degree
        )

    def render(
        self,
        camera: Camera,
        context: AppearanceContext,
        *,
        exact: bool = False,
        track_means2d: bool = False,
    ) -> RenderOutput:
        """Renders a view with the colors of `context` on a black background.

        `exact` disables the rasterizer's alpha floor.
        """
        return rasterize(
            self.cloud,
            camera,
            self.sh(context),
            tile_size=self.config.tile_size,
            alpha_floor=0.0 if exact else self.config.alpha_floor,
            track_means2d=track_means2d,
        )


    ######################
    # State Dictionaries #
    ######################

    def state(self) -> dict[str, np.ndarray]:
        """Every tensor needed to rebuild the model, keyed for checkpoints."""
        tensors = {f"cloud.{name}": values for name, values in self.cloud.arrays().items()}
        tensors |= {f"network.{name}": values for name, values in self.state_dict().items()}
        tensors["aabb.min_corner"] = self.aabb.min_corner.copy()
        tensors["aabb.max_corner"] = self.aabb.max_corner.copy()
        tensors["aabb.crop_ratio"] = np.array(self.aabb.crop_ratio)
        for key, value in self.config.to_dict().items():
            tensors[f"config.{key}"] = np.array(float(value))
        return tensors

    @classmethod
    def from_state(cls, tensors: dict[str, np.ndarray]) -> WildGaussianModel:
        try:
            config = TrainConfig(**{
                key[len("config."):]: value.item()
                for key, value in tensors.items() if key.startswith("config.")
            })
            cloud = GaussianCloud(**{
                name: tensors[f"cloud.{name}"] for name in GaussianCloud.FIELDS
            })
            aabb = Aabb(
                tensors["aabb.min_corner"],
                tensors["aabb.max_corner"],
                float(tensors["aabb.crop_ratio"]),
            )
        except (KeyError, TypeError) as e:
            raise CheckpointError(f"checkpoint is missing model state: {e}") from e
        model = cls(cloud, config, aabb, np.random.default_rng(0))
        model.load_state_dict({
            key[len("network."):]: value
            for key, value in tensors.items() if key.startswith("network.")
        })
        return model
