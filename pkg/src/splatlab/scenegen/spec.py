"""Specifications of synthetic benchmark scenes.

A scene is read from JSON. Every key is optional; missing keys take the
defaults of the dataclasses below, and primitives without an explicit
``albedo`` grid receive a seeded random texture. `SceneSpecification.to_dict`
writes the fully resolved scene, so its echo regenerates the same data.

"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ..core.errors import ContractViolation


__all__ = [
    "LightSpot",
    "AppearanceVariant",
    "Primitive",
    "OrbitSpecification",
    "OccluderSpecification",
    "SceneSpecification",
    "PRIMITIVE_KINDS",
]


# faces and size entries per primitive kind
PRIMITIVE_KINDS = {"box": (6, 3), "sphere": (1, 1), "plane": (1, 2)}


def _vector(name: str, value: Any, length: int) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in value)
    except TypeError as e:
        raise ContractViolation(f"'{name}' must be a list of {length} numbers; got {value!r}") from e
    if len(values) != length or not all(np.isfinite(values)):
        raise ContractViolation(f"'{name}' must hold {length} finite numbers; got {value!r}")
    return values


def _positive(name: str, value: Any) -> None:
    if not value > 0:
        raise ContractViolation(f"'{name}' must be positive; got {value!r}")


def _unknown_keys(name: str, record: Mapping[str, Any], known: set[str]) -> None:
    unknown = set(record) - known
    if unknown:
        raise ContractViolation(f"'{name}' has unknown keys {sorted(unknown)}")


@dataclass(frozen=True, slots=True)
class LightSpot:
    """A spherical region brightened by 1 + intensity * max(0, 1 - d^2 / radius^2)."""
    position: tuple[float, float, float]
    radius: float
    intensity: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", _vector("position", self.position, 3))
        _positive("radius", self.radius)
        if self.intensity < 0:
            raise ContractViolation(f"'intensity' must be non-negative; got {self.intensity!r}")

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> LightSpot:
        _unknown_keys("spot", record, {"position", "radius", "intensity"})
        try:
            return cls(record["position"], float(record["radius"]), float(record["intensity"]))
        except KeyError as e:
            raise ContractViolation(f"light spot is missing {e}") from e

    def to_dict(self) -> dict[str, Any]:
        return {"position": list(self.position), "radius": self.radius, "intensity": self.intensity}


@dataclass(frozen=True, slots=True)
class AppearanceVariant:
    """A per-view lighting condition.

    Colors pass through ``gain -> ** gamma -> * white_balance -> clamp``
    after the light spots have been applied.
    """
    gain: float = 1.0
    gamma: float = 1.0
    white_balance: tuple[float, float, float] = (1.0, 1.0, 1.0)
    spots: tuple[LightSpot, ...] = ()

    def __post_init__(self) -> None:
        _positive("gain", self.gain)
        _positive("gamma", self.gamma)
        balance = _vector("white_balance", self.white_balance, 3)
        if min(balance) <= 0:
            raise ContractViolation(f"'white_balance' must be positive; got {balance!r}")
        object.__setattr__(self, "white_balance", balance)
        object.__setattr__(self, "spots", tuple(self.spots))

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> AppearanceVariant:
        _unknown_keys("variant", record, {"gain", "gamma", "white_balance", "spots"})
        return cls(
            gain=float(record.get("gain", 1.0)),
            gamma=float(record.get("gamma", 1.0)),
            white_balance=record.get("white_balance", (1.0, 1.0, 1.0)),
            spots=tuple(LightSpot.from_dict(s) for s in record.get("spots", ())),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "gain": self.gain,
            "gamma": self.gamma,
            "white_balance": list(self.white_balance),
            "spots": [spot.to_dict() for spot in self.spots],
        }


@dataclass(frozen=True, slots=True, eq=False)
class Primitive:
    """A textured box, sphere or horizontal rectangle.

    Parameters
    ----------
    kind : {"box", "sphere", "plane"}
    center : tuple of float
    size : tuple of float
        Half extents (x, y, z) of a box, (radius,) of a sphere and half
        extents (x, y) of a plane, which faces +z.
    albedo : numpy.ndarray
        (faces, G, G, 3) albedo grid; boxes have six faces ordered
        -x, +x, -y, +y, -z, +z.
    """
    kind: str
    center: tuple[float, float, float]
    size: tuple[float, ...]
    albedo: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.kind not in PRIMITIVE_KINDS:
            raise ContractViolation(
                f"'kind' must be one of {sorted(PRIMITIVE_KINDS)}; got {self.kind!r}"
            )
        faces, sizes = PRIMITIVE_KINDS[self.kind]
        object.__setattr__(self, "center", _vector("center", self.center, 3))
        size = _vector("size", self.size, sizes)
        for value in size:
            _positive("size", value)
        object.__setattr__(self, "size", size)

        albedo = np.asarray(self.albedo, dtype=np.float64)
        if albedo.ndim == 3:
            albedo = np.broadcast_to(albedo, (faces,) + albedo.shape).copy()
        if (
            albedo.ndim != 4 or albedo.shape[0] != faces or albedo.shape[3] != 3
            or albedo.shape[1] != albedo.shape[2] or albedo.shape[1] < 1
        ):
            raise ContractViolation(
                f"'albedo' of a {self.kind} must be ({faces}, G, G, 3); got {albedo.shape}"
            )
        if albedo.min() < 0 or albedo.max() > 1:
            raise ContractViolation("'albedo' must lie in [0, 1]")
        albedo.setflags(write=False)
        object.__setattr__(self, "albedo", albedo)

    @classmethod
    def from_dict(cls, record: Mapping[str, Any], rng: np.random.Generator) -> Primitive:
        """Reads a primitive; without ``albedo`` a ``texture`` x ``texture`` grid is drawn from `rng`."""
        _unknown_keys("primitive", record, {"kind", "center", "size", "albedo", "texture"})
        try:
            kind = record["kind"]
            center = record["center"]
            size = record["size"]
        except KeyError as e:
            raise ContractViolation(f"primitive is missing {e}") from e
        if "albedo" in record:
            albedo = record["albedo"]
        else:
            faces, _ = PRIMITIVE_KINDS.get(kind, (1, 0))
            grid = int(record.get("texture", 4))
            _positive("texture", grid)
            base = rng.uniform(0.2, 0.8, size=3)
            albedo = np.clip(base + rng.uniform(-0.15, 0.15, size=(faces, grid, grid, 3)), 0.05, 0.95)
        return cls(kind, center, size, albedo)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "center": list(self.center),
            "size": list(self.size),
            "albedo": self.albedo.tolist(),
        }


@dataclass(frozen=True, slots=True)
class OrbitSpecification:
    """Cameras on horizontal rings around `target`, looking at it with +z up.

    View i sits at azimuth 2 pi i / views and at height
    ``heights[i % len(heights)]`` above the target.
    """
    radius: float = 3.5
    heights: tuple[float, ...] = (1.5, 2.5)
    target: tuple[float, float, float] = (0.0, 0.0, 0.3)
    fov_degrees: float = 50.0

    def __post_init__(self) -> None:
        _positive("radius", self.radius)
        heights = tuple(float(h) for h in self.heights)
        if not heights:
            raise ContractViolation("'heights' must not be empty")
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "target", _vector("target", self.target, 3))
        if not 0.0 < self.fov_degrees < 180.0:
            raise ContractViolation(f"'fov_degrees' must be in (0, 180); got {self.fov_degrees!r}")

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> OrbitSpecification:
        _unknown_keys("orbit", record, {"radius", "heights", "target", "fov_degrees"})
        defaults = cls()
        return cls(
            radius=float(record.get("radius", defaults.radius)),
            heights=tuple(record.get("heights", defaults.heights)),
            target=record.get("target", defaults.target),
            fov_degrees=float(record.get("fov_degrees", defaults.fov_degrees)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "radius": self.radius,
            "heights": list(self.heights),
            "target": list(self.target),
            "fov_degrees": self.fov_degrees,
        }


@dataclass(frozen=True, slots=True)
class OccluderSpecification:
    """Solid convex sprites pasted over a share of the views.

    Parameters
    ----------
    fraction : float
        Share of views that receive 1 to `max_count` sprites.
    max_count : int
        At most 3.
    max_coverage : float
        Upper bound of the share of a view's pixels covered by sprites,
        at most 0.15.
    """
    fraction: float = 0.5
    max_count: int = 3
    max_coverage: float = 0.15

    def __post_init__(self) -> None:
        if not 0.0 <= self.fraction <= 1.0:
            raise ContractViolation(f"'fraction' must be in [0, 1]; got {self.fraction!r}")
        if int(self.max_count) != self.max_count or not 0 <= self.max_count <= 3:
            raise ContractViolation(f"'max_count' must be an integer in [0, 3]; got {self.max_count!r}")
        object.__setattr__(self, "max_count", int(self.max_count))
        if not 0.0 <= self.max_coverage <= 0.15:
            raise ContractViolation(f"'max_coverage' must be in [0, 0.15]; got {self.max_coverage!r}")

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> OccluderSpecification:
        _unknown_keys("occluders", record, {"fraction", "max_count", "max_coverage"})
        defaults = cls()
        return cls(
            fraction=float(record.get("fraction", defaults.fraction)),
            max_count=record.get("max_count", defaults.max_count),
            max_coverage=float(record.get("max_coverage", defaults.max_coverage)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {"fraction": self.fraction, "max_count": self.max_count, "max_coverage": self.max_coverage}


_DEFAULT_PRIMITIVES = (
    {"kind": "plane", "center": (0.0, 0.0, 0.0), "size": (2.0, 2.0), "texture": 8},
    {"kind": "box", "center": (0.6, -0.4, 0.35), "size": (0.35, 0.35, 0.35)},
    {"kind": "sphere", "center": (-0.5, 0.5, 0.45), "size": (0.45,)},
)

_DEFAULT_VARIANTS = (
    AppearanceVariant(),
    AppearanceVariant(
        gain=1.4, white_balance=(1.0, 0.9, 0.8),
        spots=(LightSpot((0.6, -0.4, 0.7), 0.6, 0.8),),
    ),
    AppearanceVariant(gain=0.7, gamma=1.2, white_balance=(0.8, 0.9, 1.1)),
    AppearanceVariant(
        gamma=0.8, white_balance=(1.1, 1.0, 0.9),
        spots=(LightSpot((-0.5, 0.5, 0.9), 0.5, 1.2), LightSpot((-1.0, -1.0, 0.0), 0.8, 0.6)),
    ),
)


@dataclass(frozen=True, slots=True, eq=False)
class SceneSpecification:
    """A synthetic scene and the views rendered of it.

    View i is rendered under ``variants[i % len(variants)]``.

    Parameters
    ----------
    seed : int, optional
    width, height : int, optional
        Image size in pixels, by default 64 x 64.
    views : int, optional
        Number of views, by default 40.
    points : int, optional
        Number of surface samples in the initial point cloud.
    primitives : tuple of Primitive
    variants : tuple of AppearanceVariant
        At least two entries.
    orbit : OrbitSpecification
    occluders : OccluderSpecification
    """
    seed: int = 0
    width: int = 64
    height: int = 64
    views: int = 40
    points: int = 2_000
    primitives: tuple[Primitive, ...] = ()
    variants: tuple[AppearanceVariant, ...] = _DEFAULT_VARIANTS
    orbit: OrbitSpecification = field(default_factory=OrbitSpecification)
    occluders: OccluderSpecification = field(default_factory=OccluderSpecification)


    ###################
    # Special Methods #
    ###################

    def __post_init__(self) -> None:
        for name in ("seed", "width", "height", "views", "points"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ContractViolation(f"'{name}' must be an integer; got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.seed < 0:
            raise ContractViolation(f"'seed' must be non-negative; got {self.seed!r}")
        for name in ("width", "height", "views", "points"):
            _positive(name, getattr(self, name))

        primitives = tuple(self.primitives)
        if not primitives:
            rng = np.random.default_rng((self.seed, 3))
            primitives = tuple(Primitive.from_dict(p, rng) for p in _DEFAULT_PRIMITIVES)
        object.__setattr__(self, "primitives", primitives)

        variants = tuple(self.variants)
        if len(variants) < 2:
            raise ContractViolation(f"'variants' must hold at least 2 entries; got {len(variants)}")
        object.__setattr__(self, "variants", variants)


    ################
    # Constructors #
    ################

    @classmethod
    def from_dict(cls, record: Mapping[str, Any]) -> SceneSpecification:
        _unknown_keys(
            "scene", record,
            {"seed", "width", "height", "views", "points", "primitives", "variants", "orbit", "occluders"},
        )
        seed = record.get("seed", 0)
        kwargs: dict[str, Any] = {
            key: record[key] for key in ("seed", "width", "height", "views", "points") if key in record
        }
        if "primitives" in record:
            rng = np.random.default_rng((int(seed), 3))
            kwargs["primitives"] = tuple(Primitive.from_dict(p, rng) for p in record["primitives"])
        if "variants" in record:
            kwargs["variants"] = tuple(AppearanceVariant.from_dict(v) for v in record["variants"])
        if "orbit" in record:
            kwargs["orbit"] = OrbitSpecification.from_dict(record["orbit"])
        if "occluders" in record:
            kwargs["occluders"] = OccluderSpecification.from_dict(record["occluders"])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: str | Path) -> SceneSpecification:
        path = Path(path)
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ContractViolation(f"{path}: invalid JSON ({e})") from e
        if not isinstance(record, dict):
            raise ContractViolation(f"{path}: expected a JSON object")
        return cls.from_dict(record)


    ###########
    # Methods #
    ###########

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "width": self.width,
            "height": self.height,
            "views": self.views,
            "points": self.points,
            "primitives": [p.to_dict() for p in self.primitives],
            "variants": [v.to_dict() for v in self.variants],
            "orbit": self.orbit.to_dict(),
            "occluders": self.occluders.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def variant_of(self, view: int) -> AppearanceVariant:
        return self.variants[view % len(self.variants)]
