"""Heuristic densification and pruning of a Gaussian cloud.

"""

from __future__ import annotations

import logging
from dataclasses import dataclass, asdict

import numpy as np

from ..core.errors import ContractViolation
from .cloud import GaussianCloud
from .geometry import rotation_from_quaternion


__all__ = [
    "DensifySpecification",
    "DensifyStats",
    "DensifyResult",
    "densify_and_prune",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class DensifySpecification:
    """Cadence and thresholds of densification.

    Parameters
    ----------
    interval : int
        Steps between two densification passes.
    until_fraction : float
        Densification stops after this fraction of the iterations.
    grad_threshold : float
        Mean projected-center gradient norm (NDC units) above which a
        Gaussian is cloned or split.
    min_opacity : float
        Gaussians with a lower opacity are pruned.
    percent_dense : float
        Gaussians whose largest scale exceeds this fraction of the scene
        extent are split instead of cloned.
    split_factor : float
        Scale divisor applied to split children.
    """
    interval: int = 200
    until_fraction: float = 0.6
    grad_threshold: float = 2e-4
    min_opacity: float = 0.01
    percent_dense: float = 0.01
    split_factor: float = 1.6

    def __post_init__(self) -> None:
        if int(self.interval) != self.interval or self.interval < 1:
            raise ContractViolation(f"'interval' must be a positive integer; got {self.interval!r}")
        if not 0.0 <= self.until_fraction <= 1.0:
            raise ContractViolation(f"'until_fraction' must be in [0, 1]; got {self.until_fraction!r}")
        for name in ("grad_threshold", "percent_dense"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"'{name}' must be positive; got {getattr(self, name)!r}")
        if not 0.0 <= self.min_opacity < 1.0:
            raise ContractViolation(f"'min_opacity' must be in [0, 1); got {self.min_opacity!r}")
        if not self.split_factor > 1.0:
            raise ContractViolation(f"'split_factor' must exceed 1; got {self.split_factor!r}")

    def to_dict(self) -> dict:
        return asdict(self)


class DensifyStats:
    """Running sums of projected-center gradient norms per Gaussian."""

    def __init__(self, count: int) -> None:
        self.grad_sum = np.zeros(count)
        self.seen = np.zeros(count, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.grad_sum)

    def accumulate(self, visible: np.ndarray, grad2d: np.ndarray, width: int, height: int) -> None:
        """Adds one step of screen-space center gradients.

        Pixel gradients are converted to NDC units (the NDC extent of the
        image is 2 along each axis).
        """
        if grad2d is None or len(visible) == 0:
            return
        ndc = grad2d * np.array([width / 2.0, height / 2.0])
        np.add.at(self.grad_sum, visible, np.linalg.norm(ndc, axis=1))
        np.add.at(self.seen, visible, 1)

    def mean(self) -> np.ndarray:
        return np.where(self.seen > 0, self.grad_sum / np.maximum(self.seen, 1), 0.0)


@dataclass(slots=True)
class DensifyResult:
    """What a densification pass did.

    Attributes
    ----------
    source : numpy.ndarray
        For every Gaussian of the new cloud, the index of the Gaussian it
        was derived from.
    fresh : numpy.ndarray
        True for Gaussians created by this pass.
    cloned, split, pruned : int
    """
    source: np.ndarray
    fresh: np.ndarray
    cloned: int
    split: int
    pruned: int

    @property
    def changed(self) -> bool:
        return bool(self.cloned or self.split or self.pruned)


def densify_and_prune(
    cloud: GaussianCloud,
    stats: DensifyStats,
    spec: DensifySpecification,
    extent: float,
    rng: np.random.Generator,
) -> DensifyResult:
    """Clones, splits and prunes Gaussians in place.

    Gaussians whose mean gradient reaches the threshold are cloned when
    small and replaced by two samples with scale / `split_factor` when
    large; Gaussians below `min_opacity` are removed afterwards. Children
    inherit every parameter, intrinsic features included, of their source.
    """
    n = len(cloud)
    if len(stats) != n:
        raise ContractViolation(f"'stats' tracks {len(stats)} Gaussians; the cloud has {n}")
    arrays = cloud.arrays()
    scales = np.exp(arrays["log_scales"])
    hot = stats.mean() >= spec.grad_threshold
    large = scales.max(axis=1, initial=0.0) > spec.percent_dense * extent
    clone = np.nonzero(hot & ~large)[0]
    split = np.nonzero(hot & large)[0]

    parts = {name: [values] for name, values in arrays.items()}
    sources = [np.arange(n)]
    for name, values in arrays.items():
        parts[name].append(values[clone])
    sources.append(clone)

    if len(split):
        rotations = rotation_from_quaternion(arrays["rotations"][split]).values
        for _ in range(2):
            offsets = rng.normal(size=(len(split), 3)) * scales[split]
            children = {name: values[split].copy() for name, values in arrays.items()}
            children["means"] = children["means"] + np.einsum("nij,nj->ni", rotations, offsets)
            children["log_scales"] = children["log_scales"] - np.log(spec.split_factor)
            for name, values in children.items():
                parts[name].append(values)
            sources.append(split)

    merged = {name: np.concatenate(chunks, axis=0) for name, chunks in parts.items()}
    source = np.concatenate(sources)
    fresh = np.arange(len(source)) >= n

    keep = np.ones(len(source), dtype=bool)
    keep[split] = False
    opacity = 1.0 / (1.0 + np.exp(-merged["opacity_logits"]))
    low = opacity < spec.min_opacity
    pruned = int(np.count_nonzero(keep & low))
    keep &= ~low

    if len(clone) or len(split) or pruned:
        cloud.replace({name: values[keep] for name, values in merged.items()})
        logger.info(
            "densified: %d cloned, %d split, %d pruned; %d Gaussians",
            len(clone), len(split), pruned, int(keep.sum()),
        )
    return DensifyResult(
        source=source[keep],
        fresh=fresh[keep],
        cloned=len(clone),
        split=len(split),
        pruned=pruned,
    )
