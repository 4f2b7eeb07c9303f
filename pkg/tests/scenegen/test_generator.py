"""Tests of the synthetic scene generator.

"""

import json
import logging

import numpy as np
import pytest

from splatlab.core.errors import ContractViolation
from splatlab.scenegen import (
    AppearanceVariant,
    LightSpot,
    OccluderSpecification,
    OrbitSpecification,
    Primitive,
    SceneGenerator,
    SceneSpecification,
    generate,
    intersect,
    shade,
    tone_curve,
)


CLEAN = OccluderSpecification(fraction=0.0)


def _sphere_scene(**overrides) -> SceneSpecification:
    params = dict(
        width=15, height=15, views=3, points=50,
        primitives=(Primitive("sphere", (0.0, 0.0, 0.3), (0.5,), np.full((8, 8, 3), 0.5)),),
        variants=(AppearanceVariant(gain=2.0), AppearanceVariant()),
        orbit=OrbitSpecification(radius=3.0, heights=(1.0,), target=(0.0, 0.0, 0.3)),
        occluders=CLEAN,
    )
    return SceneSpecification(**(params | overrides))


class TestToneAndLight:
    def test_gain_scales_colors_exactly(self, rng):
        colors = rng.uniform(0.0, 1.0, size=(10, 3))
        doubled = tone_curve(colors, AppearanceVariant(gain=2.0), clamp=False)
        assert np.array_equal(doubled, 2.0 * colors)

    def test_clamping(self):
        toned = tone_curve(np.array([[0.9, 0.1, 0.5]]), AppearanceVariant(gain=2.0))
        assert np.allclose(toned, [[1.0, 0.2, 1.0]])

    def test_spot_falloff(self):
        variant = AppearanceVariant(spots=(LightSpot((0.0, 0.0, 0.0), 1.0, 0.5),))
        light = shade(np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [2.0, 0.0, 0.0]]), variant)
        assert np.allclose(light, [1.5, 1.375, 1.0])


class TestIntersect:
    def test_box_hit_from_outside_and_inside(self):
        box = Primitive("box", (0.0, 0.0, 0.0), (1.0, 1.0, 1.0), np.full((1, 1, 3), 0.5))
        directions = np.array([[0.0, 0.0, 1.0]])
        assert intersect(box, np.array([0.0, 0.0, -3.0]), directions)[0] == pytest.approx(2.0)
        assert intersect(box, np.array([0.0, 0.0, 0.0]), directions)[0] == pytest.approx(1.0)

    def test_plane_miss_is_infinite(self):
        plane = Primitive("plane", (0.0, 0.0, 0.0), (1.0, 1.0), np.full((1, 1, 3), 0.5))
        directions = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [3.0, 0.0, -1.0]])
        t = intersect(plane, np.array([0.0, 0.0, 1.0]), directions)
        assert t[0] == np.inf
        assert t[1] == pytest.approx(1.0)
        assert t[2] == np.inf


class TestRenderView:
    def test_sphere_depth_on_the_optical_axis(self):
        generator = SceneGenerator(_sphere_scene())
        render = generator.render_view(1)
        distance = np.hypot(3.0, 1.0)
        assert render.depth[7, 7] == pytest.approx(distance - 0.5, abs=1e-9)
        assert render.depth[0, 0] == 0.0
        assert not render.image[0, 0].any()

    def test_gain_two_doubles_the_radiance(self):
        generator = SceneGenerator(_sphere_scene())
        render = generator.render_view(0)
        assert np.array_equal(render.image, np.clip(2.0 * render.radiance, 0.0, 1.0))
        other = generator.render_view(2)
        assert np.array_equal(other.image, np.clip(2.0 * other.radiance, 0.0, 1.0))

    def test_view_out_of_range_raises(self):
        with pytest.raises(ContractViolation):
            SceneGenerator(_sphere_scene()).render_view(3)

    def test_no_occluders_keep_masks_full(self, clean_scene):
        generator = SceneGenerator(clean_scene)
        assert all(generator.render_view(v).mask.all() for v in range(clean_scene.views))

    def test_occluders_respect_the_coverage_budget(self):
        spec = SceneSpecification(
            width=32, height=32, views=6, points=100,
            occluders=OccluderSpecification(fraction=1.0, max_count=3, max_coverage=0.15),
        )
        generator = SceneGenerator(spec)
        for view in range(spec.views):
            render = generator.render_view(view)
            assert np.mean(render.mask == 0.0) <= 0.15

    def test_views_are_independent_of_render_order(self, tiny_scene):
        generator = SceneGenerator(tiny_scene)
        late = generator.render_view(3)
        for view in range(3):
            generator.render_view(view)
        again = generator.render_view(3)
        assert np.array_equal(late.image, again.image)
        assert np.array_equal(late.mask, again.mask)


class TestPoints:
    def test_point_count_and_colors(self, tiny_scene):
        points, colors = SceneGenerator(tiny_scene).sample_points()
        assert points.shape == (200, 3)
        assert colors.shape == (200, 3)
        assert colors.min() >= 0.0 and colors.max() <= 1.0

    def test_sphere_samples_lie_on_the_surface(self):
        points, _ = SceneGenerator(_sphere_scene()).sample_points()
        radii = np.linalg.norm(points - (0.0, 0.0, 0.3), axis=1)
        assert np.allclose(radii, 0.5)


class TestGenerate:
    def test_layout(self, tiny_dataset_dir, tiny_scene):
        assert sorted(p.name for p in (tiny_dataset_dir / "images").iterdir()) == [
            "000.png", "001.png", "002.png", "003.png",
        ]
        assert len(list((tiny_dataset_dir / "depth").glob("*.pgm"))) == 4
        cameras = json.loads((tiny_dataset_dir / "cameras.json").read_text(encoding="utf-8"))
        assert len(cameras) == tiny_scene.views
        echo = json.loads((tiny_dataset_dir / "spec.json").read_text(encoding="utf-8"))
        assert echo == tiny_scene.to_dict()

    def test_same_seed_same_bytes(self, tiny_scene, tiny_dataset_dir, tmp_path):
        other = generate(tiny_scene, tmp_path / "again")
        for path in tiny_dataset_dir.rglob("*"):
            if path.is_file():
                assert (other / path.relative_to(tiny_dataset_dir)).read_bytes() == path.read_bytes()

    def test_identical_variants_only_warn(self, tmp_path, caplog, monkeypatch):
        monkeypatch.setattr(logging.getLogger("splatlab"), "propagate", True)
        spec = _sphere_scene(variants=(AppearanceVariant(), AppearanceVariant()), views=2)
        with caplog.at_level(logging.WARNING):
            generate(spec, tmp_path / "scene")
        assert "identical" in caplog.text


class TestSpecification:
    def test_json_echo_regenerates_the_scene(self, tiny_scene, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(tiny_scene.to_json(), encoding="utf-8")
        assert SceneSpecification.from_json(path).to_dict() == tiny_scene.to_dict()

    def test_missing_keys_take_defaults(self):
        spec = SceneSpecification.from_dict({"views": 6, "occluders": {"fraction": 0.25}})
        assert (spec.views, spec.width) == (6, 64)
        assert spec.occluders.fraction == 0.25
        assert [p.kind for p in spec.primitives] == ["plane", "box", "sphere"]

    def test_default_textures_depend_on_the_seed(self):
        first = SceneSpecification(seed=1).primitives[0].albedo
        second = SceneSpecification(seed=2).primitives[0].albedo
        assert not np.array_equal(first, second)
        assert np.array_equal(first, SceneSpecification(seed=1).primitives[0].albedo)

    @pytest.mark.parametrize("record", [
        {"colour": 1},
        {"variants": [{"gain": 1.0}]},
        {"occluders": {"max_coverage": 0.2}},
        {"occluders": {"max_count": 4}},
        {"orbit": {"fov_degrees": 180.0}},
        {"primitives": [{"kind": "cone", "center": [0, 0, 0], "size": [1]}]},
        {"primitives": [{"kind": "sphere", "center": [0, 0], "size": [1]}]},
        {"views": 0},
        {"width": 2.5},
    ])
    def test_invalid_records_raise(self, record):
        with pytest.raises(ContractViolation):
            SceneSpecification.from_dict(record)

    def test_invalid_json_raises(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ContractViolation):
            SceneSpecification.from_json(path)

    def test_variants_cycle_over_views(self):
        spec = _sphere_scene()
        assert spec.variant_of(2) is spec.variants[0]
        assert spec.variant_of(1) is spec.variants[1]
