"""The explicit scene: a cloud of anisotropic 3D Gaussians.

"""

from __future__ import annotations

import logging
from typing import Mapping

import numpy as np

from ..core.errors import ContractViolation
from ..diffcore import Tensor


__all__ = [
    "GaussianCloud",
    "FEATURE_DIM",
]

logger = logging.getLogger(__name__)


FEATURE_DIM = 32


def _logit(p: float) -> float:
    return float(np.log(p / (1.0 - p)))


class GaussianCloud:
    """Contiguous per-Gaussian parameter tensors.

    Attributes
    ----------
    means : Tensor
        (n, 3) centers in world units.
    log_scales : Tensor
        (n, 3); scales are ``exp(log_scales)``.
    rotations : Tensor
        (n, 4) quaternions (w, x, y, z); normalized before use.
    opacity_logits : Tensor
        (n,); opacities are ``sigmoid(opacity_logits)``.
    features : Tensor
        (n, FEATURE_DIM) intrinsic features.

    Notes
    -----
    View-dependent SH coefficients are not stored here; they are produced
    for every reference image by the fusion network.
    """

    FIELDS = ("means", "log_scales", "rotations", "opacity_logits", "features")
    WIDTHS = {"means": 3, "log_scales": 3, "rotations": 4, "opacity_logits": None}


    ###################
    # Special Methods #
    ###################

    def __init__(
        self,
        means: np.ndarray,
        log_scales: np.ndarray,
        rotations: np.ndarray,
        opacity_logits: np.ndarray,
        features: np.ndarray,
    ) -> None:
        arrays = {
            "means": np.asarray(means, dtype=np.float64),
            "log_scales": np.asarray(log_scales, dtype=np.float64),
            "rotations": np.asarray(rotations, dtype=np.float64),
            "opacity_logits": np.asarray(opacity_logits, dtype=np.float64),
            "features": np.asarray(features, dtype=np.float64),
        }
        self._validate(arrays)
        for name, values in arrays.items():
            setattr(self, name, Tensor(values, requires_grad=True, name=name))

    def __len__(self) -> int:
        return self.means.shape[0]

    def __repr__(self) -> str:
        return f"GaussianCloud(count={len(self)}, feature_dim={self.feature_dim})"


    ##################
    # Static Methods #
    ##################

    @classmethod
    def _validate(cls, arrays: Mapping[str, np.ndarray]) -> None:
        count = arrays["means"].shape[0] if arrays["means"].ndim else -1
        for name, values in arrays.items():
            if values.shape[:1] != (count,):
                raise ContractViolation(
                    f"'{name}' must have {count} rows; got shape {values.shape}"
                )
            width = cls.WIDTHS.get(name, values.shape[-1] if values.ndim == 2 else 0)
            expected = (count,) if width is None else (count, width)
            if values.shape != expected:
                raise ContractViolation(
                    f"'{name}' must have shape {expected}; got {values.shape}"
                )
            if not np.isfinite(values).all():
                raise ContractViolation(f"'{name}' must be finite")


    ################
    # Constructors #
    ################

    @classmethod
    def from_points(
        cls,
        points: np.ndarray,
        rng: np.random.Generator,
        *,
        feature_dim: int = FEATURE_DIM,
        initial_opacity: float = 0.1,
        neighbors: int = 3,
    ) -> GaussianCloud:
        """Initializes one isotropic Gaussian per point.

        Each scale is the root-mean-square distance to the point's nearest
        `neighbors` neighbours; features are drawn from N(0, 0.1).
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        count = len(points)
        if count == 0:
            logger.warning("initializing an empty Gaussian cloud")
            scales = np.zeros((0,))
        elif count == 1:
            scales = np.full(1, 0.01)
        else:
            k = min(neighbors, count - 1)
            scales = np.empty(count)
            for start in range(0, count, 512):
                block = points[start:start + 512]
                d2 = np.sum((block[:, None, :] - points[None, :, :]) ** 2, axis=-1)
                d2[np.arange(len(block)), np.arange(start, start + len(block))] = np.inf
                nearest = np.partition(d2, k - 1, axis=1)[:, :k]
                scales[start:start + len(block)] = np.sqrt(np.mean(nearest, axis=1))
            scales = np.maximum(scales, 1e-7)

        rotations = np.zeros((count, 4))
        rotations[:, 0] = 1.0
        return cls(
            means=points,
            log_scales=np.repeat(np.log(scales)[:, None], 3, axis=1),
            rotations=rotations,
            opacity_logits=np.full(count, _logit(initial_opacity)),
            features=rng.normal(0.0, 0.1, size=(count, feature_dim)),
        )


    ##############
    # Properties #
    ##############

    @property
    def count(self) -> int:
        return len(self)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def opacities(self) -> np.ndarray:
        logits = self.opacity_logits.values
        return 1.0 / (1.0 + np.exp(-logits))

    @property
    def scales(self) -> np.ndarray:
        return np.exp(self.log_scales.values)


    ###########
    # Methods #
    ###########

    def parameters(self) -> dict[str, Tensor]:
        return {name: getattr(self, name) for name in self.FIELDS}

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name).values.copy() for name in self.FIELDS}

    def replace(self, arrays: Mapping[str, np.ndarray]) -> None:
        """Swaps in new per-Gaussian arrays, keeping the leaf tensors."""
        arrays = {name: np.asarray(arrays[name], dtype=np.float64) for name in self.FIELDS}
        self._validate(arrays)
        for name, values in arrays.items():
            getattr(self, name).assign(values)

    def zero_grad(self) -> None:
        for tensor in self.parameters().values():
            tensor.zero_grad()
