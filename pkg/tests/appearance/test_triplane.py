"""Tests of the box, the triplane and the appearance embeddings.

"""

import numpy as np
import pytest

from splatlab.appearance import (
    EMBED_DIM,
    Aabb,
    AppearanceContext,
    PointCloudRGB,
    TriplaneEncoder,
    TriplaneFeatures,
    backproject_masked,
    blend_appearance,
    fuse_to_sh,
    fusion_network,
    local_network,
    normalize_points,
    sample_local_embedding,
    sample_triplane,
    splat_triplane_color,
)
from splatlab.core.errors import ContractViolation
from splatlab.diffcore import Tensor, grad_check
from splatlab.gaussians import GaussianCloud, rasterize


UNIT_BOX = Aabb((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))


def _context(rng, resolution: int = 4, channels: int = 3) -> AppearanceContext:
    grids = Tensor(rng.normal(size=(3, channels, resolution, resolution)))
    return AppearanceContext(
        global_embedding=Tensor(rng.normal(size=EMBED_DIM)),
        triplane=TriplaneFeatures(grids, UNIT_BOX),
        fallback=Tensor(rng.normal(size=EMBED_DIM)),
    )


class TestAabb:
    def test_from_points_crops_around_the_center(self):
        points = np.array([[-2.0, -2.0, -2.0], [2.0, 2.0, 2.0]])
        aabb = Aabb.from_points(points, crop_ratio=0.5, percentiles=(0.0, 100.0))
        assert np.allclose(aabb.min_corner, -1.0)
        assert np.allclose(aabb.max_corner, 1.0)

    def test_inverted_corners_raise(self):
        with pytest.raises(ContractViolation):
            Aabb((1.0, 0.0, 0.0), (0.0, 1.0, 1.0))

    def test_normalize_flags_outside_points(self):
        normalized, outside = normalize_points(np.array([[0.5, 0.5, 0.5], [1.5, 0.5, 0.5]]), UNIT_BOX)
        assert np.allclose(normalized[0], 0.5)
        assert outside.tolist() == [False, True]

    def test_equality_compares_corners(self):
        assert Aabb((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)) == UNIT_BOX
        assert Aabb((0.0, 0.0, 0.0), (2.0, 1.0, 1.0)) != UNIT_BOX


class TestSplatting:
    def test_forward_and_reverse_keep_the_extremes(self):
        points = PointCloudRGB(
            positions=[[0.1, 0.1, 0.2], [0.1, 0.1, 0.8]],
            colors=[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
        )
        color = splat_triplane_color(points, UNIT_BOX, 4)
        # the xy plane drops z: forward keeps the low-z point, reverse the high-z one
        assert np.allclose(color.planes[0, 0:3, 0, 0], (1.0, 0.0, 0.0))
        assert np.allclose(color.planes[0, 3:6, 0, 0], (0.0, 0.0, 1.0))
        assert color.occupancy[0].sum() == 1

    def test_result_does_not_depend_on_point_order(self, rng):
        positions = rng.uniform(0.0, 1.0, size=(50, 3))
        colors = rng.uniform(0.0, 1.0, size=(50, 3))
        order = rng.permutation(50)
        first = splat_triplane_color(PointCloudRGB(positions, colors), UNIT_BOX, 8)
        second = splat_triplane_color(PointCloudRGB(positions[order], colors[order]), UNIT_BOX, 8)
        assert np.array_equal(first.planes, second.planes)

    def test_points_outside_the_box_are_dropped(self):
        points = PointCloudRGB([[2.0, 0.5, 0.5]], [[1.0, 1.0, 1.0]])
        color = splat_triplane_color(points, UNIT_BOX, 4)
        assert not color.planes.any()
        assert not color.occupancy.any()

    @pytest.mark.parametrize("resolution", [2, 6])
    def test_resolution_must_be_a_power_of_two(self, resolution):
        with pytest.raises(ContractViolation):
            splat_triplane_color(PointCloudRGB(np.zeros((0, 3)), np.zeros((0, 3))), UNIT_BOX, resolution)


class TestBackprojection:
    def test_only_confident_pixels_are_lifted(self, small_camera):
        shape = small_camera.shape
        image = np.full(shape + (3,), 0.5)
        depth = np.full(shape, 3.0)
        mask = np.ones(shape)
        mask[0, :] = 0.2
        depth[1, :] = 0.0
        points = backproject_masked(image, depth, mask, small_camera)
        assert len(points) == (shape[0] - 2) * shape[1]
        _, z = small_camera.project(points.positions)
        assert np.allclose(z, 3.0)

    def test_accumulation_cutoff(self, small_camera):
        shape = small_camera.shape
        accumulation = np.zeros(shape)
        accumulation[2, 3] = 0.9
        points = backproject_masked(
            np.zeros(shape + (3,)), np.ones(shape), np.ones(shape), small_camera,
            accumulation=accumulation,
        )
        assert len(points) == 1

    def test_rendered_depth_lifts_back_onto_the_surface(self, small_camera):
        # a flat opaque disk in the y = 0 plane, facing the camera
        cloud = GaussianCloud(
            means=np.zeros((1, 3)),
            log_scales=np.log([[2.0, 1e-3, 2.0]]),
            rotations=np.array([[1.0, 0.0, 0.0, 0.0]]),
            opacity_logits=np.array([4.0]),
            features=np.zeros((1, 2)),
        )
        out = rasterize(cloud, small_camera, np.zeros((1, 1, 3)))
        shape = small_camera.shape
        points = backproject_masked(
            np.full(shape + (3,), 0.5), out.normalized_depth(), np.ones(shape), small_camera,
            accumulation=out.accumulation.values,
        )
        covered = out.accumulation.values > 0.5
        assert len(points) == np.count_nonzero(covered) > 0
        assert np.allclose(points.positions[:, 1], 0.0, atol=1e-9)
        uv, _ = small_camera.project(points.positions)
        assert np.allclose(uv, small_camera.pixel_grid()[covered], atol=1e-9)

    def test_shape_mismatch_raises(self, small_camera):
        with pytest.raises(ContractViolation):
            backproject_masked(np.zeros((2, 2, 3)), np.ones((2, 2)), np.ones((2, 2)), small_camera)


class TestSampling:
    def test_sample_sums_the_three_planes(self, rng):
        grids = np.zeros((3, 2, 4, 4))
        grids[0] += 1.0
        grids[1] += 2.0
        grids[2] += 4.0
        features = TriplaneFeatures(Tensor(grids), UNIT_BOX)
        summed, outside = sample_triplane(features, rng.uniform(0.0, 1.0, size=(5, 3)))
        assert np.allclose(summed.values, 7.0)
        assert not outside.any()

    def test_gradients_reach_grids_and_positions(self, rng):
        grids = Tensor(rng.normal(size=(3, 2, 4, 4)), requires_grad=True)
        positions = Tensor(rng.uniform(0.2, 0.8, size=(6, 3)), requires_grad=True)
        weights = rng.normal(size=(6, 2))

        def objective(g, p):
            summed, _ = sample_triplane(TriplaneFeatures(g, UNIT_BOX), p)
            return (summed * weights).sum()

        assert grad_check(objective, [grids, positions], floor=1e-4) < 1e-6

    def test_encoder_keeps_the_planes_apart(self, rng):
        encoder = TriplaneEncoder(rng, channels=5, widths=(4, 8, 8))
        planes = np.zeros((3, 6, 8, 8))
        planes[1] = rng.uniform(size=(6, 8, 8))
        color = splat_triplane_color(PointCloudRGB(np.zeros((0, 3)), np.zeros((0, 3))), UNIT_BOX, 8)
        color.planes = planes
        features = encoder.encode(color, UNIT_BOX)
        assert features.grids.shape == (3, 5, 8, 8)
        # planes 0 and 2 see identical (empty) input
        assert np.allclose(features.grids.values[0], features.grids.values[2])


class TestEmbeddings:
    def test_outside_gaussians_use_the_fallback_exactly(self, rng):
        ctx = _context(rng)
        local = local_network(rng, channels=3)
        means = np.array([[0.5, 0.5, 0.5], [3.0, 0.5, 0.5], [0.5, -1.0, 0.5]])
        embedding = sample_local_embedding(means, ctx, local).values
        assert np.array_equal(embedding[1], ctx.fallback.values)
        assert np.array_equal(embedding[2], ctx.fallback.values)
        assert not np.array_equal(embedding[0], ctx.fallback.values)

    def test_no_triplane_means_fallback_everywhere(self, rng):
        ctx = _context(rng)
        ctx = AppearanceContext(ctx.global_embedding, None, ctx.fallback)
        embedding = sample_local_embedding(np.zeros((4, 3)), ctx, local_network(rng, channels=3)).values
        assert np.array_equal(embedding, np.tile(ctx.fallback.values, (4, 1)))

    def test_fusion_output_shape(self, rng):
        fusion = fusion_network(rng, degree=1, feature_dim=6)
        sh = fuse_to_sh(
            rng.normal(size=EMBED_DIM), rng.normal(size=(5, EMBED_DIM)), rng.normal(size=(5, 6)), fusion, 1,
        )
        assert sh.shape == (5, 4, 3)

    def test_fusion_rejects_wrong_widths(self, rng):
        fusion = fusion_network(rng, degree=1, feature_dim=6)
        with pytest.raises(ContractViolation):
            fuse_to_sh(rng.normal(size=EMBED_DIM), rng.normal(size=(5, EMBED_DIM)), rng.normal(size=(5, 7)), fusion, 1)


class TestBlend:
    @pytest.mark.parametrize("alpha", [0.0, 1.0])
    def test_endpoints_return_the_contexts(self, rng, alpha):
        first, second = _context(rng), _context(rng)
        blended = blend_appearance(first, second, alpha)
        assert blended is (first if alpha == 0.0 else second)

    def test_midpoint_averages_every_part(self, rng):
        first, second = _context(rng), _context(rng)
        blended = blend_appearance(first, second, 0.5)
        assert np.allclose(
            blended.triplane.grids.values, 0.5 * (first.triplane.grids.values + second.triplane.grids.values),
        )
        assert np.allclose(
            blended.global_embedding.values, 0.5 * (first.global_embedding.values + second.global_embedding.values),
        )
        assert np.allclose(blended.fallback.values, 0.5 * (first.fallback.values + second.fallback.values))

    def test_alpha_out_of_range_raises(self, rng):
        with pytest.raises(ContractViolation):
            blend_appearance(_context(rng), _context(rng), 1.5)

    def test_mismatched_grids_raise(self, rng):
        with pytest.raises(ContractViolation):
            blend_appearance(_context(rng, resolution=4), _context(rng, resolution=8), 0.5)
