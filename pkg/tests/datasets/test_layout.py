"""Tests of dataset loading and train/test splits.

"""

import json

import numpy as np
import pytest

from splatlab.core.errors import ContractViolation, DatasetError
from splatlab.datasets import SplitSpecification, load_dataset, read_points, write_points


class TestSplit:
    def test_explicit_indices(self):
        train, test = SplitSpecification(test_indices=(4, 1)).split(6)
        assert train == (0, 2, 3, 5)
        assert test == (1, 4)

    def test_seeded_split_is_deterministic_and_disjoint(self):
        spec = SplitSpecification(test_fraction=0.25, seed=7)
        train, test = spec.split(40)
        assert spec.split(40) == (train, test)
        assert len(test) == 10
        assert sorted(train + test) == list(range(40))

    def test_zero_fraction_keeps_every_view_for_training(self):
        assert SplitSpecification(test_fraction=0.0).split(5) == ((0, 1, 2, 3, 4), ())

    @pytest.mark.parametrize("kwargs", [
        {"test_fraction": 1.0},
        {"test_indices": (1, 1)},
        {"test_indices": (-1,)},
    ])
    def test_bad_specifications_raise(self, kwargs):
        with pytest.raises(ContractViolation):
            SplitSpecification(**kwargs)

    def test_out_of_range_index_raises(self):
        with pytest.raises(ContractViolation):
            SplitSpecification(test_indices=(9,)).split(4)


class TestLoadDataset:
    def test_views_and_split(self, tiny_dataset):
        assert len(tiny_dataset) == 4
        assert tiny_dataset.train == (0, 1, 2)
        assert [view.name for view in tiny_dataset.test_views] == ["003"]
        view = tiny_dataset.views[0]
        assert view.image.shape == (16, 16, 3)
        assert view.depth.shape == (16, 16)
        assert view.gt_mask.shape == (16, 16)
        assert tiny_dataset.points.shape == (200, 3)

    def test_split_views_by_name(self, tiny_dataset):
        assert len(tiny_dataset.split_views("all")) == 4
        assert len(tiny_dataset.split_views("train")) == 3
        with pytest.raises(ContractViolation):
            tiny_dataset.split_views("val")

    def test_camera_extent_bounds_the_training_cameras(self, tiny_dataset):
        centers = np.stack([view.camera.center for view in tiny_dataset.train_views])
        radius = np.linalg.norm(centers - centers.mean(axis=0), axis=1).max()
        assert tiny_dataset.camera_extent() == pytest.approx(1.1 * radius)

    def test_optional_files_may_be_missing(self, tiny_dataset_dir):
        for path in (tiny_dataset_dir / "depth").iterdir():
            path.unlink()
        (tiny_dataset_dir / "gt_masks" / "001.png").unlink()
        dataset = load_dataset(tiny_dataset_dir)
        assert all(view.depth is None for view in dataset.views)
        assert dataset.views[1].gt_mask is None
        assert dataset.views[0].gt_mask is not None

    def test_missing_camera_entry_raises(self, tiny_dataset_dir):
        path = tiny_dataset_dir / "cameras.json"
        records = json.loads(path.read_text(encoding="utf-8"))
        path.write_text(json.dumps(records[:-1]), encoding="utf-8")
        with pytest.raises(DatasetError, match="view '003' has no camera entry"):
            load_dataset(tiny_dataset_dir)

    def test_extra_camera_entries_raise(self, tiny_dataset_dir):
        (tiny_dataset_dir / "images" / "003.png").unlink()
        with pytest.raises(DatasetError, match="4 camera entries for 3 images"):
            load_dataset(tiny_dataset_dir)

    def test_no_images_raise(self, tiny_dataset_dir):
        for path in (tiny_dataset_dir / "images").iterdir():
            path.unlink()
        with pytest.raises(DatasetError, match="no views"):
            load_dataset(tiny_dataset_dir)

    def test_non_rigid_camera_raises(self, tiny_dataset_dir):
        path = tiny_dataset_dir / "cameras.json"
        records = json.loads(path.read_text(encoding="utf-8"))
        records[2]["world_to_camera"][0] *= 2.0
        path.write_text(json.dumps(records), encoding="utf-8")
        with pytest.raises(DatasetError, match="camera of view '002'"):
            load_dataset(tiny_dataset_dir)

    def test_missing_directory_raises(self, tmp_path):
        with pytest.raises(DatasetError):
            load_dataset(tmp_path / "nowhere")


class TestPoints:
    def test_round_trip(self, tmp_path, rng):
        points = rng.normal(size=(5, 3))
        colors = rng.uniform(size=(5, 3))
        write_points(tmp_path / "points.txt", points, colors)
        read, read_colors = read_points(tmp_path / "points.txt")
        assert np.allclose(read, points, rtol=1e-8)
        assert np.allclose(read_colors, colors, rtol=1e-8)

    @pytest.mark.parametrize("text, reason", [
        ("", "no points"),
        ("1 2 3\n", "expected 6 columns"),
        ("1 2 3 0 0 nan\n", "finite"),
        ("1 2 x 0 0 0\n", "cannot parse"),
    ])
    def test_bad_files_raise(self, tmp_path, text, reason):
        path = tmp_path / "points.txt"
        path.write_text(text, encoding="utf-8")
        with pytest.raises(DatasetError, match=reason):
            read_points(path)
