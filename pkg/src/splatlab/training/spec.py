"""The training configuration.

A `TrainConfig` is read from and written to a flat ``key=value`` text
file whose keys are the field names below. Every field is a number or a
flag, so the configuration also round-trips through checkpoints.

"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from ..core.errors import ContractViolation
from ..gaussians.densify import DensifySpecification


__all__ = [
    "TrainConfig",
    "VARIANTS",
]


VARIANTS: dict[str, dict[str, Any]] = {
    "full": {},
    "baseline": {"use_global": False, "use_local": False, "use_mask": False, "use_depth": False},
    "no_global": {"use_global": False},
    "no_local": {"use_local": False},
    "no_mask": {"use_mask": False},
    "no_depth": {"use_depth": False},
    "no_reverse": {"reverse_projection": False},
    "no_crop": {"crop_ratio": 1.0},
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True, slots=True)
class TrainConfig:
    """Schedules, loss weights, learning rates and model sizes.

    Parameters
    ----------
    iterations : int, optional
        Number of optimization steps, by default 5,000.
    warmup_iters : int, optional
        Steps before the mask, depth and local appearance terms switch
        on; a negative value (the default) selects 10% of `iterations`.
    lambda_mask_start, lambda_mask_end : float, optional
        The mask-penalty weight falls linearly from start to end between
        the end of warm-up and the last iteration; it is held at the
        start value during warm-up.
    lambda_depth : float, optional
        Weight of the depth correlation loss, by default 0.05.
    lambda_image : float, optional
        L1 share of the photometric loss (the rest is 1 - SSIM).
    mask_threshold : float, optional
        Visibility score above which a pixel counts as static.
    lr_* : float, optional
        Adam learning rates per parameter group; `lr_means` is scaled
        by the scene extent.
    sh_degree : int, optional
    triplane_resolution, triplane_channels : int, optional
    crop_ratio : float, optional
        Share of the initial point cloud's extent covered by the triplane box.
    use_global, use_local, use_mask, use_depth, reverse_projection, use_intrinsic : bool, optional
        Switches for the ablation variants.
    densify_* : optional
        See `DensifySpecification`.
    tile_size : int, optional
        Rasterizer tile side in pixels.
    alpha_floor : float, optional
        Rasterizer alpha floor used while training; 0 renders exactly.
    backproject_cutoff : float, optional
        Minimum rendered accumulation for a pixel to be back-projected.
    log_interval, checkpoint_interval : int, optional
        0 disables periodic checkpoints.
    seed : int, optional
    """
    iterations: int = field(default=5_000)
    warmup_iters: int = field(default=-1)
    lambda_mask_start: float = field(default=0.4)
    lambda_mask_end: float = field(default=0.1)
    lambda_depth: float = field(default=0.05)
    lambda_image: float = field(default=0.8)
    mask_threshold: float = field(default=0.5)

    lr_means: float = field(default=1.6e-4)
    lr_scales: float = field(default=5e-3)
    lr_rotations: float = field(default=1e-3)
    lr_opacity: float = field(default=5e-2)
    lr_features: float = field(default=1e-3)
    lr_networks: float = field(default=1e-3)
    lr_fallback: float = field(default=1e-3)

    sh_degree: int = field(default=1)
    triplane_resolution: int = field(default=128)
    triplane_channels: int = field(default=16)
    crop_ratio: float = field(default=0.5)

    use_global: bool = field(default=True)
    use_local: bool = field(default=True)
    use_mask: bool = field(default=True)
    use_depth: bool = field(default=True)
    reverse_projection: bool = field(default=True)
    use_intrinsic: bool = field(default=True)

    densify_interval: int = field(default=200)
    densify_until: float = field(default=0.6)
    densify_grad_threshold: float = field(default=2e-4)
    densify_min_opacity: float = field(default=0.01)
    densify_percent_dense: float = field(default=0.01)

    tile_size: int = field(default=16)
    alpha_floor: float = field(default=1.0 / 255.0)
    backproject_cutoff: float = field(default=0.5)
    log_interval: int = field(default=100)
    checkpoint_interval: int = field(default=0)
    seed: int = field(default=0)


    ###################
    # Special Methods #
    ###################

    def __post_init__(self) -> None:
        self._coerce_types()
        self._validate_non_negative_int_fields(
            "iterations", "checkpoint_interval", "seed",
        )
        self._validate_positive_int_fields(
            "triplane_channels", "tile_size", "log_interval",
        )
        if self.warmup_iters < 0:
            object.__setattr__(self, "warmup_iters", self.iterations // 10)
        if self.iterations and not self.warmup_iters < self.iterations:
            raise ContractViolation(
                f"'warmup_iters' must be below 'iterations' ({self.iterations}); "
                f"got {self.warmup_iters!r}"
            )
        if not self.iterations and self.warmup_iters:
            raise ContractViolation(
                f"'warmup_iters' must be 0 when 'iterations' is 0; got {self.warmup_iters!r}"
            )
        for name in ("lambda_mask_start", "lambda_mask_end", "lambda_depth"):
            if getattr(self, name) < 0:
                raise ContractViolation(f"'{name}' must be non-negative; got {getattr(self, name)!r}")
        for name in ("lambda_image", "alpha_floor"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ContractViolation(f"'{name}' must be in [0, 1]; got {getattr(self, name)!r}")
        for name in ("mask_threshold", "backproject_cutoff"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ContractViolation(f"'{name}' must be in (0, 1); got {getattr(self, name)!r}")
        for item in fields(self):
            if item.name.startswith("lr_") and not getattr(self, item.name) > 0:
                raise ContractViolation(
                    f"'{item.name}' must be positive; got {getattr(self, item.name)!r}"
                )
        if self.sh_degree not in (0, 1, 2):
            raise ContractViolation(f"'sh_degree' must be 0, 1 or 2; got {self.sh_degree!r}")
        res = self.triplane_resolution
        if res < 4 or res & (res - 1):
            raise ContractViolation(
                f"'triplane_resolution' must be a power of two >= 4; got {res!r}"
            )
        if not 0.0 < self.crop_ratio <= 1.0:
            raise ContractViolation(f"'crop_ratio' must be in (0, 1]; got {self.crop_ratio!r}")
        self.densify_spec()


    ################
    # Constructors #
    ################

    @classmethod
    def for_variant(cls, name: str, **overrides: Any) -> TrainConfig:
        """The configuration of a named ablation variant."""
        if name not in VARIANTS:
            raise ContractViolation(
                f"'variant' must be one of {sorted(VARIANTS)}; got {name!r}"
            )
        return cls(**(VARIANTS[name] | overrides))

    @classmethod
    def from_text(cls, text: str) -> TrainConfig:
        known = {item.name: item.type for item in fields(cls)}
        values: dict[str, Any] = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ContractViolation(f"line {number}: expected 'key=value'; got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ContractViolation(f"unknown configuration key '{key}' on line {number}")
            values[key] = cls._parse(key, known[key], value)
        return cls(**values)

    @classmethod
    def from_file(cls, path: str | Path) -> TrainConfig:
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


    ###########
    # Methods #
    ###########

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_text(self) -> str:
        lines = []
        for key, value in self.to_dict().items():
            if isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}")
        return "\n".join(lines) + "\n"

    def with_updates(self, **changes: Any) -> TrainConfig:
        return replace(self, **changes)

    def densify_spec(self) -> DensifySpecification:
        return DensifySpecification(
            interval=self.densify_interval,
            until_fraction=self.densify_until,
            grad_threshold=self.densify_grad_threshold,
            min_opacity=self.densify_min_opacity,
            percent_dense=self.densify_percent_dense,
        )

    def lambda_mask(self, iteration: int) -> float:
        """Mask-penalty weight at an iteration."""
        start, end = self.lambda_mask_start, self.lambda_mask_end
        if iteration <= self.warmup_iters:
            return start
        last = self.iterations - 1
        if iteration >= last or last <= self.warmup_iters:
            return end
        share = (iteration - self.warmup_iters) / (last - self.warmup_iters)
        return start + share * (end - start)

    def in_warmup(self, iteration: int) -> bool:
        return iteration < self.warmup_iters


    ##################
    # Helper Methods #
    ##################

    @staticmethod
    def _parse(key: str, type_: Any, value: str) -> Any:
        kind = type_ if isinstance(type_, str) else type_.__name__
        try:
            if kind == "bool":
                lowered = value.lower()
                if lowered in _TRUE:
                    return True
                if lowered in _FALSE:
                    return False
                raise ValueError(value)
            if kind == "int":
                return int(value)
            return float(value)
        except ValueError as e:
            raise ContractViolation(
                f"'{key}' must be a {kind}; got {value!r}"
            ) from e

    def _coerce_types(self) -> None:
        for item in fields(self):
            value = getattr(self, item.name)
            kind = item.type if isinstance(item.type, str) else item.type.__name__
            if kind == "bool":
                if not isinstance(value, (bool, int, float)):
                    raise TypeError(f"'{item.name}' must be a bool; got type '{type(value).__name__}'")
                object.__setattr__(self, item.name, bool(value))
            elif kind == "int":
                if isinstance(value, bool) or not float(value).is_integer():
                    raise TypeError(f"'{item.name}' must be an int; got {value!r}")
                object.__setattr__(self, item.name, int(value))
            else:
                if isinstance(value, bool):
                    raise TypeError(f"'{item.name}' must be a float; got {value!r}")
                object.__setattr__(self, item.name, float(value))

    def _validate_non_negative_int_fields(self, *names: str) -> None:
        for name in names:
            value = getattr(self, name)
            if value < 0:
                raise ContractViolation(f"'{name}' must be non-negative; got {value!r}")

    def _validate_positive_int_fields(self, *names: str) -> None:
        for name in names:
            value = getattr(self, name)
            if value <= 0:
                raise ContractViolation(f"'{name}' must be positive; got {value!r}")
