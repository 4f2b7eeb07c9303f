import matplotlib

matplotlib.use("Agg")

import numpy as np
import pytest

from splatlab.datasets import SplitSpecification, load_dataset
from splatlab.gaussians import Camera, GaussianCloud
from splatlab.scenegen import OccluderSpecification, SceneSpecification, generate


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def small_camera() -> Camera:
    """A 12x10 camera 3 units in front of the origin, looking along +y."""
    return Camera.look_at((0.0, -3.0, 0.0), (0.0, 0.0, 0.0), fx=14.0, width=12, height=10)


@pytest.fixture
def tiny_cloud(rng) -> GaussianCloud:
    """Six anisotropic Gaussians around the origin with moderate opacity."""
    count = 6
    rotations = rng.normal(size=(count, 4))
    return GaussianCloud(
        means=rng.uniform(-0.5, 0.5, size=(count, 3)),
        log_scales=np.log(rng.uniform(0.1, 0.3, size=(count, 3))),
        rotations=rotations,
        opacity_logits=rng.uniform(-1.5, 0.0, size=count),
        features=rng.normal(0.0, 0.1, size=(count, 4)),
    )


@pytest.fixture
def tiny_scene() -> SceneSpecification:
    return SceneSpecification(width=16, height=16, views=4, points=200)


@pytest.fixture
def tiny_dataset_dir(tmp_path, tiny_scene):
    return generate(tiny_scene, tmp_path / "scene")


@pytest.fixture
def tiny_dataset(tiny_dataset_dir):
    return load_dataset(tiny_dataset_dir, SplitSpecification(test_indices=(3,)))


@pytest.fixture
def clean_scene() -> SceneSpecification:
    """A tiny scene without occluders."""
    return SceneSpecification(
        width=16, height=16, views=4, points=200,
        occluders=OccluderSpecification(fraction=0.0),
    )
