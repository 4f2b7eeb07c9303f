"""Tests of the depth correlation loss and the staged objective.

"""

import logging

import numpy as np
import pytest

from splatlab.appearance import Aabb
from splatlab.core.errors import ContractViolation
from splatlab.diffcore import Tensor, grad_check, no_grad
from splatlab.gaussians import GaussianCloud, RenderOutput, rasterize
from splatlab.training import LossParts, TrainConfig, WildGaussianModel, depth_pearson_loss, total_loss
from splatlab.transient import masked_photometric_loss


@pytest.fixture
def depth(rng):
    return rng.uniform(1.0, 4.0, size=(6, 7))


class TestDepthPearson:
    def test_affine_depth_costs_nothing(self, depth):
        loss = depth_pearson_loss(depth, 2.5 * depth + 3.0, np.ones(depth.shape))
        assert loss.item() == pytest.approx(0.0, abs=1e-12)

    def test_inverted_depth_costs_two(self, depth):
        loss = depth_pearson_loss(depth, 10.0 - depth, np.ones(depth.shape))
        assert loss.item() == pytest.approx(2.0)

    def test_any_affine_map_is_scored_by_its_sign(self, depth, rng):
        ones = np.ones(depth.shape)
        for _ in range(100):
            a = rng.uniform(0.1, 10.0)
            b = rng.uniform(-0.9 * a, 5.0)
            assert depth_pearson_loss(depth, a * depth + b, ones).item() == pytest.approx(0.0, abs=1e-12)
            # estimates must stay positive to be used
            assert depth_pearson_loss(depth, a * (4.5 - depth) + abs(b), ones).item() == pytest.approx(2.0, abs=1e-12)

    def test_masked_and_missing_pixels_are_ignored(self, depth, rng):
        estimate = 0.5 * depth
        mask = np.ones(depth.shape)
        mask[:2] = 0.3
        estimate[:2] = rng.uniform(0.0, 10.0, size=(2, 7))
        estimate[3, :3] = 0.0
        assert depth_pearson_loss(depth, estimate, mask).item() == pytest.approx(0.0, abs=1e-12)

    def test_too_few_pixels_skip_the_loss(self, depth, caplog, monkeypatch):
        monkeypatch.setattr(logging.getLogger("splatlab"), "propagate", True)
        mask = np.zeros(depth.shape)
        mask[0, 0] = 1.0
        with caplog.at_level(logging.WARNING):
            loss = depth_pearson_loss(depth, depth, mask)
        assert loss.item() == 0.0
        assert "fewer than 2" in caplog.text

    def test_flat_estimate_skips_the_loss(self, depth):
        assert depth_pearson_loss(depth, np.full(depth.shape, 2.0), np.ones(depth.shape)).item() == 0.0

    def test_shape_mismatch_raises(self, depth):
        with pytest.raises(ContractViolation):
            depth_pearson_loss(depth, depth[:, :-1], np.ones(depth.shape))

    def test_gradients(self, depth, rng):
        rendered = Tensor(depth, requires_grad=True)
        estimate = rng.uniform(1.0, 4.0, size=depth.shape)
        mask = rng.uniform(0.0, 1.0, size=depth.shape)
        assert grad_check(lambda d: depth_pearson_loss(d, estimate, mask), [rendered], floor=1e-4) < 1e-6


def _render(rng, shape=(6, 7)):
    return RenderOutput(
        color=Tensor(rng.uniform(0.0, 1.0, size=shape + (3,))),
        depth=Tensor(rng.uniform(1.0, 4.0, size=shape)),
        accumulation=Tensor(np.ones(shape)),
    )


class TestTotalLoss:
    @pytest.fixture
    def config(self):
        return TrainConfig(iterations=10, warmup_iters=5)

    @pytest.fixture
    def inputs(self, rng):
        render = _render(rng)
        reference = rng.uniform(0.0, 1.0, size=(6, 7, 3))
        mask = rng.uniform(0.2, 0.9, size=(6, 7))
        estimate = 5.0 - render.depth.values
        return render, reference, mask, estimate

    def test_warmup_ignores_mask_and_depth(self, config, inputs):
        render, reference, mask, estimate = inputs
        _, parts = total_loss(render, reference, mask, estimate, config, 2)
        unmasked = masked_photometric_loss(reference, render.color, np.ones(mask.shape)).item()
        assert parts.image == pytest.approx(unmasked)
        assert parts.depth == 0.0
        assert parts.mask > 0.0
        assert parts.lambda_mask == pytest.approx(0.4)

    def test_after_warmup_every_term_is_active(self, config, inputs):
        render, reference, mask, estimate = inputs
        total, parts = total_loss(render, reference, mask, estimate, config, 7)
        masked = masked_photometric_loss(reference, render.color, mask).item()
        assert parts.image == pytest.approx(masked)
        assert parts.depth > 0.0
        expected = parts.image + parts.lambda_mask * parts.mask + config.lambda_depth * parts.depth
        assert total.item() == pytest.approx(expected)
        assert parts.total == pytest.approx(expected)

    def test_disabled_mask_drops_its_penalty(self, inputs):
        render, reference, mask, estimate = inputs
        config = TrainConfig.for_variant("no_mask", iterations=10, warmup_iters=5)
        _, parts = total_loss(render, reference, mask, estimate, config, 7)
        unmasked = masked_photometric_loss(reference, render.color, np.ones(mask.shape)).item()
        assert (parts.mask, parts.lambda_mask) == (0.0, 0.0)
        assert parts.image == pytest.approx(unmasked)

    def test_missing_depth_estimate(self, config, inputs):
        render, reference, mask, _ = inputs
        _, parts = total_loss(render, reference, mask, None, config, 7)
        assert isinstance(parts, LossParts)
        assert parts.depth == 0.0

    def test_gradients_reach_the_gaussians(self, tiny_cloud, small_camera, rng):
        config = TrainConfig(iterations=10, warmup_iters=0, alpha_floor=0.0, triplane_resolution=8)
        sh = rng.normal(0.0, 0.2, size=(len(tiny_cloud), 4, 3))
        shape = small_camera.shape
        reference = rng.uniform(0.0, 1.0, size=shape + (3,))
        mask = rng.uniform(0.6, 0.9, size=shape)
        estimate = rng.uniform(1.0, 4.0, size=shape)

        def objective(means, log_scales, rotations, opacity_logits):
            render = rasterize(tiny_cloud, small_camera, sh, tile_size=None)
            loss, _ = total_loss(render, reference, mask, estimate, config, 3)
            return loss

        point = [tiny_cloud.means, tiny_cloud.log_scales, tiny_cloud.rotations, tiny_cloud.opacity_logits]
        assert grad_check(objective, point, floor=1e-4) < 1e-5

    def test_gradients_reach_every_network_and_the_features(self, small_camera, rng):
        # one Gaussian sits outside the box, so the fallback vector is in use
        means = np.vstack([rng.uniform(-0.4, 0.4, size=(5, 3)), [[0.0, 0.0, 0.9]]])
        cloud = GaussianCloud(
            means=means,
            log_scales=np.log(rng.uniform(0.15, 0.3, size=(6, 3))),
            rotations=rng.normal(size=(6, 4)),
            opacity_logits=rng.uniform(0.0, 1.0, size=6),
            features=rng.normal(0.0, 0.1, size=(6, 4)),
        )
        # a low threshold keeps every near-0.5 mask score on the same side
        config = TrainConfig(
            iterations=10, warmup_iters=2, triplane_resolution=8, triplane_channels=4,
            mask_threshold=0.1, backproject_cutoff=0.05,
        )
        box = Aabb((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5))
        model = WildGaussianModel(cloud, config, box, rng)
        shape = small_camera.shape
        reference = rng.uniform(0.0, 1.0, size=shape + (3,))
        estimate = rng.uniform(1.0, 4.0, size=shape)

        def objective(*_):
            parsed = model.build_context(reference, small_camera)
            render = model.render(small_camera, parsed.context, exact=True)
            loss, _ = total_loss(render, reference, parsed.mask, estimate, config, 5)
            return loss

        output_layers = [
            model.parser.unet.head,
            model.parser.global_mlp.layers[-1],
            model.triplane_encoder.head,
            model.local.layers[-1],
            model.fusion.layers[-1],
        ]
        point = [model.fallback, cloud.features, model.parser.unet.head.weight, model.triplane_encoder.head.weight]
        point += [layer.bias for layer in output_layers]
        registered = {id(tensor) for tensor in model.parameters().values()}
        assert all(id(tensor) in registered for tensor in point if tensor is not cloud.features)
        with no_grad():
            parsed = model.build_context(reference, small_camera)
        assert parsed.context.triplane is not None
        assert np.all(np.abs(parsed.mask.values - 0.1) > 0.05)
        assert grad_check(objective, point, epsilon=1e-5, floor=1e-5) < 1e-4
