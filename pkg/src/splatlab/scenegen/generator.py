"""Rendering synthetic scenes by direct ray casting.

Every pixel ray is intersected with the scene's primitives; the nearest
hit is shaded with its albedo times the light spots of the view's
appearance variant and then passed through the variant's tone curve.
Rays that miss everything see a black sky with depth 0. Occluder sprites
are pasted afterwards and only touch the color image.

"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core.errors import ContractViolation
from ..datasets import write_depth, write_image, write_mask, write_points
from ..gaussians.camera import NEAR_PLANE, Camera
from .spec import AppearanceVariant, Primitive, SceneSpecification


__all__ = [
    "ViewRender",
    "SceneGenerator",
    "generate",
    "tone_curve",
    "intersect",
    "shade",
]

logger = logging.getLogger(__name__)

# the two in-face axes of the box faces along x, y and z
_FACE_AXES = ((1, 2), (0, 2), (0, 1))


def tone_curve(colors: np.ndarray, variant: AppearanceVariant, *, clamp: bool = True) -> np.ndarray:
    """gain, then gamma, then white balance, then clamping to [0, 1]."""
    toned = (variant.gain * np.asarray(colors)) ** variant.gamma * np.asarray(variant.white_balance)
    return np.clip(toned, 0.0, 1.0) if clamp else toned


def shade(points: np.ndarray, variant: AppearanceVariant) -> np.ndarray:
    """Light factor 1 + sum of the spots' falloffs at `points`."""
    light = np.ones(len(points))
    for spot in variant.spots:
        d2 = np.sum((points - np.asarray(spot.position)) ** 2, axis=1)
        light += spot.intensity * np.maximum(0.0, 1.0 - d2 / spot.radius ** 2)
    return light


def intersect(primitive: Primitive, origin: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Ray parameters of the first hit beyond the near plane; inf on a miss.

    Rays are ``origin + t * directions`` with `directions` of shape (n, 3).
    """
    c = np.asarray(primitive.center)
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(directions, dtype=np.float64)

    if primitive.kind == "box":
        h = np.asarray(primitive.size)
        safe = np.where(d == 0.0, 1e-300, d)
        t1 = (c - h - o) / safe
        t2 = (c + h - o) / safe
        t_near = np.minimum(t1, t2).max(axis=1)
        t_far = np.maximum(t1, t2).min(axis=1)
        t = np.where(t_near > NEAR_PLANE, t_near, t_far)
        hit = (t_far >= t_near) & (t > NEAR_PLANE)

    elif primitive.kind == "sphere":
        (r,) = primitive.size
        oc = o - c
        a = np.sum(d * d, axis=1)
        b = d @ oc
        disc = b * b - a * (oc @ oc - r * r)
        root = np.sqrt(np.maximum(disc, 0.0))
        t0 = (-b - root) / a
        t = np.where(t0 > NEAR_PLANE, t0, (-b + root) / a)
        hit = (disc >= 0.0) & (t > NEAR_PLANE)

    else:
        hx, hy = primitive.size
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (c[2] - o[2]) / d[:, 2]
            p = o + t[:, None] * d
            hit = (
                (d[:, 2] != 0.0)
                & (t > NEAR_PLANE)
                & (np.abs(p[:, 0] - c[0]) <= hx)
                & (np.abs(p[:, 1] - c[1]) <= hy)
            )
    return np.where(hit, t, np.inf)


def _texture(primitive: Primitive, face: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    grid = primitive.albedo.shape[1]
    iu = np.clip(np.floor(u * grid).astype(np.int64), 0, grid - 1)
    iv = np.clip(np.floor(v * grid).astype(np.int64), 0, grid - 1)
    return primitive.albedo[face, iv, iu]


def _albedo_at(primitive: Primitive, points: np.ndarray) -> np.ndarray:
    """Albedo of surface points of `primitive`."""
    c = np.asarray(primitive.center)
    n = len(points)
    if primitive.kind == "box":
        q = (points - c) / np.asarray(primitive.size)
        axis = np.argmax(np.abs(q), axis=1)
        face = 2 * axis + (q[np.arange(n), axis] > 0)
        a1 = np.array([_FACE_AXES[a][0] for a in axis], dtype=np.int64)
        a2 = np.array([_FACE_AXES[a][1] for a in axis], dtype=np.int64)
        u = (q[np.arange(n), a1] + 1.0) / 2.0
        v = (q[np.arange(n), a2] + 1.0) / 2.0
    elif primitive.kind == "sphere":
        normal = (points - c) / primitive.size[0]
        face = np.zeros(n, dtype=np.int64)
        u = np.arctan2(normal[:, 1], normal[:, 0]) / (2.0 * np.pi) + 0.5
        v = np.arccos(np.clip(normal[:, 2], -1.0, 1.0)) / np.pi
    else:
        hx, hy = primitive.size
        face = np.zeros(n, dtype=np.int64)
        u = (points[:, 0] - c[0]) / (2.0 * hx) + 0.5
        v = (points[:, 1] - c[1]) / (2.0 * hy) + 0.5
    return _texture(primitive, face, u, v)


def _area(primitive: Primitive) -> float:
    if primitive.kind == "box":
        hx, hy, hz = primitive.size
        return 8.0 * (hx * hy + hy * hz + hx * hz)
    if primitive.kind == "sphere":
        return 4.0 * np.pi * primitive.size[0] ** 2
    hx, hy = primitive.size
    return 4.0 * hx * hy


def _sample_surface(primitive: Primitive, count: int, rng: np.random.Generator) -> np.ndarray:
    c = np.asarray(primitive.center)
    if primitive.kind == "box":
        h = np.asarray(primitive.size)
        face_area = np.repeat([h[1] * h[2], h[0] * h[2], h[0] * h[1]], 2)
        face = rng.choice(6, size=count, p=face_area / face_area.sum())
        q = rng.uniform(-1.0, 1.0, size=(count, 3))
        axis = face // 2
        q[np.arange(count), axis] = np.where(face % 2 == 1, 1.0, -1.0)
        return c + q * h
    if primitive.kind == "sphere":
        normal = rng.normal(size=(count, 3))
        normal /= np.linalg.norm(normal, axis=1, keepdims=True)
        return c + primitive.size[0] * normal
    hx, hy = primitive.size
    uv = rng.uniform(-1.0, 1.0, size=(count, 2))
    return np.column_stack([c[0] + uv[:, 0] * hx, c[1] + uv[:, 1] * hy, np.full(count, c[2])])


def _inside_convex(pixels: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Pixels on the inner side of every edge of a counter-clockwise polygon."""
    inside = np.ones(len(pixels), dtype=bool)
    for a, b in zip(vertices, np.roll(vertices, -1, axis=0)):
        edge = b - a
        rel = pixels - a
        inside &= edge[0] * rel[:, 1] - edge[1] * rel[:, 0] >= 0.0
    return inside


@dataclass(slots=True, eq=False)
class ViewRender:
    """One generated view.

    Attributes
    ----------
    camera : Camera
    radiance : numpy.ndarray
        (H, W, 3) albedo times light, before the tone curve.
    image : numpy.ndarray
        (H, W, 3) toned and clamped colors with sprites pasted on top.
    depth : numpy.ndarray
        (H, W) view-space depth of the nearest surface; 0 for the sky.
    mask : numpy.ndarray
        (H, W) 1 for static pixels, 0 where a sprite covers the view.
    """
    camera: Camera
    radiance: np.ndarray
    image: np.ndarray
    depth: np.ndarray
    mask: np.ndarray


class SceneGenerator:
    """Renders the views and the point cloud of a `SceneSpecification`.

    Every view draws its randomness from a generator seeded with
    ``(seed, 1, view)`` and the point cloud from ``(seed, 2)``, so views
    can be rendered in any order.
    """

    def __init__(self, spec: SceneSpecification, *, name: str = "generator") -> None:
        self.spec = spec
        self.logger = logging.getLogger(f"{__package__}.{name}")

    def __repr__(self) -> str:
        return f"SceneGenerator(views={self.spec.views}, size={self.spec.width}x{self.spec.height})"

    def camera(self, view: int) -> Camera:
        spec, orbit = self.spec, self.spec.orbit
        azimuth = 2.0 * np.pi * view / spec.views
        height = orbit.heights[view % len(orbit.heights)]
        target = np.asarray(orbit.target)
        eye = target + np.array([orbit.radius * np.cos(azimuth), orbit.radius * np.sin(azimuth), height])
        fx = 0.5 * spec.width / np.tan(np.radians(orbit.fov_degrees) / 2.0)
        return Camera.look_at(eye, target, fx=fx, width=spec.width, height=spec.height)

    def trace(self, camera: Camera) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Depth, owning primitive (-1 for sky) and hit points of every pixel ray."""
        origin, directions = camera.rays()
        directions = directions.reshape(-1, 3)
        best = np.full(len(directions), np.inf)
        owner = np.full(len(directions), -1, dtype=np.int64)
        for index, primitive in enumerate(self.spec.primitives):
            t = intersect(primitive, origin, directions)
            closer = t < best
            best[closer] = t[closer]
            owner[closer] = index
        hit = owner >= 0
        depth = np.where(hit, best, 0.0)
        points = origin + depth[:, None] * directions
        return depth.reshape(camera.shape), owner.reshape(camera.shape), points.reshape(camera.shape + (3,))

    def render_view(self, view: int) -> ViewRender:
        if not 0 <= view < self.spec.views:
            raise ContractViolation(f"'view' must be in [0, {self.spec.views}); got {view!r}")
        camera = self.camera(view)
        variant = self.spec.variant_of(view)
        depth, owner, points = self.trace(camera)

        radiance = np.zeros(camera.shape + (3,))
        for index, primitive in enumerate(self.spec.primitives):
            owned = owner == index
            if owned.any():
                radiance[owned] = _albedo_at(primitive, points[owned])
        hit = owner >= 0
        radiance[hit] *= shade(points[hit], variant)[:, None]
        image = tone_curve(radiance, variant)

        mask = np.ones(camera.shape)
        self._paste_sprites(np.random.default_rng((self.spec.seed, 1, view)), image, mask)
        return ViewRender(camera=camera, radiance=radiance, image=image, depth=depth, mask=mask)

    def _paste_sprites(self, rng: np.random.Generator, image: np.ndarray, mask: np.ndarray) -> None:
        occluders = self.spec.occluders
        if occluders.max_count == 0 or not rng.random() < occluders.fraction:
            return
        h, w = mask.shape
        v, u = np.mgrid[0:h, 0:w]
        pixels = np.column_stack([u.reshape(-1), v.reshape(-1)]).astype(np.float64)
        budget = occluders.max_coverage * h * w
        covered = np.zeros(h * w, dtype=bool)
        for _ in range(rng.integers(1, occluders.max_count + 1)):
            center = rng.uniform((0.0, 0.0), (w, h))
            radius = rng.uniform(0.08, 0.2) * min(h, w)
            angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=rng.integers(3, 7)))
            color = rng.uniform(0.0, 1.0, size=3)
            vertices = center + radius * np.column_stack([np.cos(angles), np.sin(angles)])
            inside = _inside_convex(pixels, vertices)
            if np.count_nonzero(covered | inside) > budget:
                continue
            covered |= inside
            image.reshape(-1, 3)[inside] = color
        mask.reshape(-1)[covered] = 0.0

    def sample_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Surface samples spread over the primitives by area, with their albedo."""
        rng = np.random.default_rng((self.spec.seed, 2))
        primitives = self.spec.primitives
        areas = np.array([_area(p) for p in primitives])
        counts = rng.multinomial(self.spec.points, areas / areas.sum())
        points, colors = [], []
        for primitive, count in zip(primitives, counts):
            samples = _sample_surface(primitive, int(count), rng)
            points.append(samples)
            colors.append(_albedo_at(primitive, samples))
        return np.concatenate(points), np.concatenate(colors)

    def generate(self, out_dir: str | Path) -> Path:
        """Writes the dataset layout read by `splatlab.datasets.load_dataset`."""
        out_dir = Path(out_dir)
        for sub in ("images", "depth", "gt_masks"):
            (out_dir / sub).mkdir(parents=True, exist_ok=True)
        if len(set(self.spec.variants)) < 2:
            self.logger.warning("all appearance variants are identical")

        cameras = []
        occluded = 0
        for view in range(self.spec.views):
            render = self.render_view(view)
            stem = f"{view:03d}"
            write_image(out_dir / "images" / f"{stem}.png", render.image)
            write_depth(out_dir / "depth" / f"{stem}.pgm", render.depth)
            write_mask(out_dir / "gt_masks" / f"{stem}.png", render.mask)
            cameras.append(render.camera.to_dict())
            occluded += bool((render.mask < 1.0).any())
            self.logger.debug("rendered view %s", stem)

        (out_dir / "cameras.json").write_text(json.dumps(cameras, indent=2), encoding="utf-8")
        points, colors = self.sample_points()
        write_points(out_dir / "points.txt", points, colors)
        (out_dir / "spec.json").write_text(self.spec.to_json(), encoding="utf-8")
        self.logger.info(
            "generated %d views (%d with occluders) and %d points in %s",
            self.spec.views, occluded, len(points), out_dir,
        )
        return out_dir


def generate(spec: SceneSpecification, out_dir: str | Path) -> Path:
    return SceneGenerator(spec).generate(out_dir)
