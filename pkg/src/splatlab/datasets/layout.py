"""Datasets on disk.

A dataset directory holds::

    images/NNN.png      8-bit RGB views
    depth/NNN.pgm       optional 16-bit depth maps (millimeters)
    gt_masks/NNN.png    optional 8-bit masks, static = 255
    cameras.json        one camera record per view, in view order
    points.txt          "x y z r g b" per line, colors in [0, 1]
    spec.json           optional generator echo

"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..core.errors import ContractViolation, DatasetError
from ..gaussians.camera import Camera
from .images import read_depth, read_image, read_mask


__all__ = [
    "SplitSpecification",
    "ViewRecord",
    "DatasetManifest",
    "load_dataset",
    "read_points",
    "write_points",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class SplitSpecification:
    """How views are divided into training and test sets.

    Parameters
    ----------
    test_fraction : float, optional
        Share of views drawn (without replacement, seeded) into the test
        set, by default 1/8.
    seed : int, optional
    test_indices : tuple of int, optional
        Explicit test views; overrides `test_fraction` and `seed`.
    """
    test_fraction: float = field(default=0.125)
    seed: int = field(default=0)
    test_indices: tuple[int, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        if not 0.0 <= self.test_fraction < 1.0:
            raise ContractViolation(
                f"'test_fraction' must be in [0, 1); got {self.test_fraction!r}"
            )
        if self.test_indices is not None:
            indices = tuple(int(i) for i in self.test_indices)
            if len(set(indices)) != len(indices):
                raise ContractViolation(f"'test_indices' must be unique; got {indices!r}")
            if any(i < 0 for i in indices):
                raise ContractViolation(f"'test_indices' must be non-negative; got {indices!r}")
            object.__setattr__(self, "test_indices", indices)

    def to_dict(self) -> dict[str, Any]:
        return {
            "test_fraction": self.test_fraction,
            "seed": self.seed,
            "test_indices": None if self.test_indices is None else list(self.test_indices),
        }

    def split(self, count: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Sorted, disjoint (train, test) view indices covering ``range(count)``."""
        if self.test_indices is not None:
            out_of_range = [i for i in self.test_indices if i >= count]
            if out_of_range:
                raise ContractViolation(
                    f"'test_indices' must be below the view count {count}; got {out_of_range!r}"
                )
            test = set(self.test_indices)
        else:
            n_test = int(np.floor(self.test_fraction * count + 0.5))
            rng = np.random.default_rng(self.seed)
            test = {int(i) for i in rng.permutation(count)[:n_test]}
        train = tuple(i for i in range(count) if i not in test)
        return train, tuple(sorted(test))


@dataclass(frozen=True, slots=True, eq=False)
class ViewRecord:
    """One decoded view and the files it came from."""
    index: int
    image_path: Path
    camera: Camera
    image: np.ndarray = field(repr=False)
    depth_path: Path | None = None
    depth: np.ndarray | None = field(default=None, repr=False)
    gt_mask_path: Path | None = None
    gt_mask: np.ndarray | None = field(default=None, repr=False)

    @property
    def name(self) -> str:
        return self.image_path.stem


@dataclass(frozen=True, slots=True, eq=False)
class DatasetManifest:
    """A validated dataset.

    Attributes
    ----------
    root : Path
    views : tuple of ViewRecord
    points, colors : numpy.ndarray
        (n, 3) initial point cloud and its colors.
    train, test : tuple of int
        Disjoint view indices that together cover every view.
    """
    root: Path
    views: tuple[ViewRecord, ...]
    points: np.ndarray = field(repr=False)
    colors: np.ndarray = field(repr=False)
    train: tuple[int, ...]
    test: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.views)

    @property
    def train_views(self) -> list[ViewRecord]:
        return [self.views[i] for i in self.train]

    @property
    def test_views(self) -> list[ViewRecord]:
        return [self.views[i] for i in self.test]

    def split_views(self, name: str) -> list[ViewRecord]:
        if name == "train":
            return self.train_views
        if name == "test":
            return self.test_views
        if name == "all":
            return list(self.views)
        raise ContractViolation(f"'split' must be 'train', 'test' or 'all'; got {name!r}")

    def camera_extent(self) -> float:
        """1.1 times the largest distance of a training camera from their mean center."""
        views = self.train_views or list(self.views)
        centers = np.stack([view.camera.center for view in views])
        radius = float(np.max(np.linalg.norm(centers - centers.mean(axis=0), axis=1)))
        return 1.1 * radius if radius > 0 else 1.0


def read_points(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise DatasetError(path, "file not found")
    try:
        table = np.loadtxt(path, dtype=np.float64, ndmin=2)
    except ValueError as e:
        raise DatasetError(path, f"cannot parse points ({e})") from e
    if table.size == 0:
        raise DatasetError(path, "no points")
    if table.shape[1] != 6:
        raise DatasetError(path, f"expected 6 columns (x y z r g b); got {table.shape[1]}")
    if not np.isfinite(table).all():
        raise DatasetError(path, "points must be finite")
    return table[:, :3].copy(), table[:, 3:].copy()


def write_points(path: str | Path, points: np.ndarray, colors: np.ndarray) -> None:
    table = np.concatenate([np.asarray(points), np.asarray(colors)], axis=1)
    np.savetxt(path, table, fmt="%.9g")


def _read_cameras(path: Path) -> list[Any]:
    if not path.is_file():
        raise DatasetError(path, "file not found")
    try:
        records = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DatasetError(path, f"invalid JSON ({e})") from e
    if not isinstance(records, list):
        raise DatasetError(path, "expected an array of camera records")
    return records


def _check_shape(path: Path, values: np.ndarray, shape: tuple[int, int]) -> None:
    if values.shape[:2] != shape:
        raise DatasetError(path, f"size {values.shape[:2]} does not match its camera {shape}")


def load_dataset(root: str | Path, split: SplitSpecification | None = None) -> DatasetManifest:
    """Reads and validates a dataset directory.

    Parameters
    ----------
    root : str or Path
    split : SplitSpecification, optional
        Defaults to ``SplitSpecification()``.

    Raises
    ------
    DatasetError
        A file is missing or corrupt, a view has no camera entry, or a
        camera is not rigid.
    """
    root = Path(root)
    split = split or SplitSpecification()
    if not root.is_dir():
        raise DatasetError(root, "dataset directory not found")

    image_paths = sorted((root / "images").glob("*.png"))
    if not image_paths:
        raise DatasetError(root / "images", "no views")
    cameras_path = root / "cameras.json"
    records = _read_cameras(cameras_path)
    if len(records) < len(image_paths):
        missing = image_paths[len(records)]
        raise DatasetError(cameras_path, f"view '{missing.stem}' has no camera entry")
    if len(records) > len(image_paths):
        raise DatasetError(
            cameras_path,
            f"{len(records)} camera entries for {len(image_paths)} images",
        )

    views = []
    for index, (image_path, record) in enumerate(zip(image_paths, records)):
        try:
            camera = Camera.from_dict(record)
        except (ContractViolation, TypeError, ValueError) as e:
            raise DatasetError(cameras_path, f"camera of view '{image_path.stem}': {e}") from e
        image = read_image(image_path)
        _check_shape(image_path, image, camera.shape)

        depth_path = root / "depth" / f"{image_path.stem}.pgm"
        depth = None
        if depth_path.is_file():
            depth = read_depth(depth_path)
            _check_shape(depth_path, depth, camera.shape)
        else:
            depth_path = None

        mask_path = root / "gt_masks" / image_path.name
        gt_mask = None
        if mask_path.is_file():
            gt_mask = read_mask(mask_path)
            _check_shape(mask_path, gt_mask, camera.shape)
        else:
            mask_path = None

        views.append(ViewRecord(
            index=index,
            image_path=image_path,
            camera=camera,
            image=image,
            depth_path=depth_path,
            depth=depth,
            gt_mask_path=mask_path,
            gt_mask=gt_mask,
        ))

    points, colors = read_points(root / "points.txt")
    train, test = split.split(len(views))
    logger.info(
        "loaded %s: %d views (%d train, %d test), %d points",
        root, len(views), len(train), len(test), len(points),
    )
    return DatasetManifest(
        root=root,
        views=tuple(views),
        points=points,
        colors=colors,
        train=train,
        test=test,
    )
