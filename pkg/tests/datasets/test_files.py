"""Tests of the image, mask, depth and checkpoint files.

"""

import struct

import numpy as np
import pytest

from splatlab.core.errors import CheckpointError, ContractViolation, DatasetError
from splatlab.datasets import (
    MAGIC,
    dumps,
    load_checkpoint,
    loads,
    read_depth,
    read_image,
    read_mask,
    save_checkpoint,
    to_bytes,
    write_depth,
    write_image,
    write_mask,
)


class TestQuantization:
    @pytest.mark.parametrize("value, expected", [
        (0.0, 0),
        (0.5, 128),
        (1.0, 255),
        (-0.2, 0),
        (1.3, 255),
        (0.1, 26),
    ])
    def test_round_half_up_and_clamp(self, value, expected):
        assert to_bytes(np.array([value]))[0] == expected


class TestImages:
    def test_image_round_trip_is_exact_on_the_byte_grid(self, tmp_path, rng):
        image = rng.integers(0, 256, size=(5, 6, 3)) / 255.0
        write_image(tmp_path / "view.png", image)
        assert np.array_equal(read_image(tmp_path / "view.png"), image)

    def test_mask_round_trip(self, tmp_path):
        mask = np.array([[0.0, 0.5], [1.0, 0.25]])
        write_mask(tmp_path / "mask.png", mask)
        assert np.allclose(read_mask(tmp_path / "mask.png") * 255.0, [[0, 128], [255, 64]])

    def test_write_image_needs_three_channels(self, tmp_path):
        with pytest.raises(ContractViolation):
            write_image(tmp_path / "view.png", np.zeros((4, 4)))

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(DatasetError, match="file not found"):
            read_image(tmp_path / "absent.png")

    def test_garbage_file_raises(self, tmp_path):
        path = tmp_path / "broken.png"
        path.write_bytes(b"not an image")
        with pytest.raises(DatasetError):
            read_image(path)


class TestDepth:
    def test_round_trip_in_millimeters(self, tmp_path):
        depth = np.array([[1.234, 0.0], [2.5, 65.535]])
        write_depth(tmp_path / "d.pgm", depth)
        assert np.allclose(read_depth(tmp_path / "d.pgm"), [[1.234, 0.0], [2.5, 65.535]])

    def test_header_comments_are_skipped(self, tmp_path):
        path = tmp_path / "d.pgm"
        path.write_bytes(b"P5\n# made by hand\n2 1\n# maxval\n65535\n" + struct.pack(">HH", 1500, 20))
        assert np.allclose(read_depth(path), [[1.5, 0.02]])

    def test_eight_bit_raster(self, tmp_path):
        path = tmp_path / "d.pgm"
        path.write_bytes(b"P5 3 1 255\n" + bytes([0, 100, 255]))
        assert np.allclose(read_depth(path), [[0.0, 0.1, 0.255]])

    @pytest.mark.parametrize("blob", [b"P6\n1 1\n255\n\x00", b"P5\n2 2\n65535\n\x00\x01", b"P5\n2"])
    def test_corrupt_maps_raise(self, tmp_path, blob):
        path = tmp_path / "d.pgm"
        path.write_bytes(blob)
        with pytest.raises(DatasetError):
            read_depth(path)

    @pytest.mark.parametrize("depth", [[[-1.0]], [[np.inf]], [[70.0]]])
    def test_unrepresentable_depth_raises(self, tmp_path, depth):
        with pytest.raises(ContractViolation):
            write_depth(tmp_path / "d.pgm", np.array(depth))


class TestCheckpoint:
    @pytest.fixture
    def tensors(self, rng):
        return {
            "cloud.means": rng.normal(size=(4, 3)),
            "scalar": np.array(2.5),
            "empty": np.zeros((0, 5)),
            "network.ünïcode": rng.normal(size=(2, 2, 2)),
        }

    def test_round_trip_is_bitwise(self, tensors, tmp_path):
        save_checkpoint(tmp_path / "model.wgs", tensors)
        restored = load_checkpoint(tmp_path / "model.wgs")
        assert list(restored) == list(tensors)
        for name, values in tensors.items():
            assert restored[name].shape == values.shape
            assert restored[name].tobytes() == values.tobytes()

    def test_blob_starts_with_magic_and_version(self, tensors):
        blob = dumps(tensors)
        assert blob[:4] == MAGIC
        assert struct.unpack("<II", blob[4:12]) == (1, len(tensors))

    def test_bad_magic_raises(self, tensors):
        with pytest.raises(CheckpointError, match="magic"):
            loads(b"XXXX" + dumps(tensors)[4:])

    def test_unknown_version_raises(self, tensors):
        blob = dumps(tensors)
        with pytest.raises(CheckpointError, match="version"):
            loads(blob[:4] + struct.pack("<I", 2) + blob[8:])

    def test_truncated_blob_raises(self, tensors):
        with pytest.raises(CheckpointError, match="truncated"):
            loads(dumps(tensors)[:-3])

    def test_trailing_bytes_raise(self, tensors):
        with pytest.raises(CheckpointError, match="trailing"):
            loads(dumps(tensors) + b"\x00")

    def test_non_numeric_tensor_raises(self):
        with pytest.raises(ContractViolation):
            dumps({"names": np.array(["a", "b"])})
