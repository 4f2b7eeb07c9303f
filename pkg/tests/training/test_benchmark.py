"""End-to-end quality checks on the default synthetic benchmark.

Every test here trains full-size models and is marked `slow`; run them
with ``pytest -m slow``.

"""

import numpy as np
import pytest

from splatlab.appearance import blend_appearance
from splatlab.datasets import SplitSpecification, load_dataset
from splatlab.diffcore import no_grad
from splatlab.metrics import mask_recall, psnr
from splatlab.scenegen import SceneSpecification, generate
from splatlab.training import TrainConfig, train


pytestmark = pytest.mark.slow

ITERATIONS = 5_000
SEEDS = (0, 1, 2)


@pytest.fixture(scope="module")
def benchmark(tmp_path_factory):
    """The default scene: 40 views of 64x64 pixels, 2k points, occluders on half the views."""
    spec = SceneSpecification()
    assert len(spec.variants) >= 4
    assert spec.occluders.fraction == 0.5
    root = generate(spec, tmp_path_factory.mktemp("benchmark"))
    return load_dataset(root, SplitSpecification())


@pytest.fixture(scope="module")
def trained(benchmark):
    """Trains each (variant, seed) pair once per module."""
    models = {}

    def _trained(variant: str, seed: int = 0):
        if (variant, seed) not in models:
            config = TrainConfig.for_variant(variant, iterations=ITERATIONS, seed=seed)
            models[variant, seed], _ = train(benchmark, config)
        return models[variant, seed]

    return _trained


def held_out_psnr(model, dataset) -> float:
    scores = []
    with no_grad():
        for view in dataset.test_views:
            context = model.build_context(view.image, view.camera).context
            render = model.render(view.camera, context, exact=True)
            scores.append(psnr(render.color.values, view.image))
    return float(np.mean(scores))


def test_appearance_modeling_beats_the_baseline(benchmark, trained):
    full = held_out_psnr(trained("full"), benchmark)
    baseline = held_out_psnr(trained("baseline"), benchmark)
    assert full >= baseline + 2.0


@pytest.mark.parametrize("variant", ["no_global", "no_mask", "no_depth"])
def test_each_ablation_lowers_held_out_quality(benchmark, trained, variant):
    wins = sum(
        held_out_psnr(trained("full", seed), benchmark) > held_out_psnr(trained(variant, seed), benchmark)
        for seed in SEEDS
    )
    assert wins >= 2


def test_masks_separate_occluders_from_the_scene(benchmark, trained):
    model = trained("full")
    occluded = [view for view in benchmark.train_views if view.gt_mask is not None and (view.gt_mask < 0.5).any()]
    assert occluded
    with no_grad():
        predicted = np.stack([model.build_context(view.image, view.camera).mask.values for view in occluded])
    truth = np.stack([view.gt_mask for view in occluded])
    occluder_recall, static_recall = mask_recall(predicted, truth, model.config.mask_threshold)
    assert occluder_recall >= 0.8
    assert static_recall >= 0.9


def test_blending_from_a_dark_to_a_bright_reference_brightens(benchmark, trained):
    model = trained("full")
    by_brightness = sorted(benchmark.train_views, key=lambda view: view.image.mean())
    dark, bright = by_brightness[0], by_brightness[-1]
    target = benchmark.test_views[0]
    with no_grad():
        contexts = [model.build_context(view.image, view.camera).context for view in (dark, bright)]
        ends = [model.render(target.camera, context).color.values for context in contexts]
        sweep = [
            model.render(target.camera, blend_appearance(*contexts, alpha)).color.values
            for alpha in (0.0, 0.25, 0.5, 0.75, 1.0)
        ]
    means = [image.mean() for image in sweep]
    assert all(a <= b for a, b in zip(means, means[1:]))
    assert np.array_equal(sweep[0], ends[0])
    assert np.array_equal(sweep[-1], ends[1])
