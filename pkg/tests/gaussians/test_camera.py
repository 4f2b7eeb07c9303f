"""Tests of the pinhole camera.

"""

import numpy as np
import pytest

from splatlab.core.errors import ContractViolation
from splatlab.gaussians import Camera


def _identity_camera(**overrides) -> Camera:
    params = dict(fx=10.0, fy=10.0, cx=4.5, cy=3.5, width=10, height=8, world_to_camera=np.eye(4))
    return Camera(**(params | overrides))


class TestValidation:
    @pytest.mark.parametrize("field, value", [
        ("fx", 0.0),
        ("fy", -1.0),
        ("width", 0),
        ("height", 2.5),
    ])
    def test_bad_intrinsics_raise(self, field, value):
        with pytest.raises(ContractViolation):
            _identity_camera(**{field: value})

    def test_non_orthonormal_rotation_raises(self):
        matrix = np.eye(4)
        matrix[0, 0] = 1.1
        with pytest.raises(ContractViolation):
            _identity_camera(world_to_camera=matrix)

    def test_reflection_raises(self):
        matrix = np.diag([1.0, 1.0, -1.0, 1.0])
        with pytest.raises(ContractViolation):
            _identity_camera(world_to_camera=matrix)

    def test_bad_last_row_raises(self):
        matrix = np.eye(4)
        matrix[3, 0] = 0.5
        with pytest.raises(ContractViolation):
            _identity_camera(world_to_camera=matrix)

    def test_matrix_is_read_only(self):
        camera = _identity_camera()
        with pytest.raises(ValueError):
            camera.world_to_camera[0, 3] = 1.0


class TestLookAt:
    def test_target_projects_to_principal_point(self, small_camera):
        uv, z = small_camera.project(np.zeros((1, 3)))
        assert np.allclose(uv[0], (small_camera.cx, small_camera.cy))
        assert z[0] == pytest.approx(3.0)

    def test_center_is_the_eye(self, small_camera):
        assert np.allclose(small_camera.center, (0.0, -3.0, 0.0))

    def test_world_up_points_up_in_the_image(self, small_camera):
        uv, _ = small_camera.project(np.array([[0.0, 0.0, 0.5]]))
        assert uv[0, 1] < small_camera.cy

    def test_parallel_up_raises(self):
        with pytest.raises(ContractViolation):
            Camera.look_at((0.0, 0.0, 5.0), (0.0, 0.0, 0.0), fx=10.0, width=4, height=4)


class TestRays:
    def test_points_along_rays_project_back_to_their_pixels(self, small_camera):
        origin, directions = small_camera.rays()
        depth = np.linspace(1.0, 4.0, small_camera.width * small_camera.height).reshape(small_camera.shape)
        points = origin + depth[..., None] * directions
        uv, z = small_camera.project(points)
        assert np.allclose(uv, small_camera.pixel_grid())
        assert np.allclose(z, depth)

    def test_to_view_and_to_world_are_inverse(self, small_camera, rng):
        points = rng.normal(size=(5, 3))
        assert np.allclose(small_camera.to_world(small_camera.to_view(points)), points)


def test_dict_round_trip(small_camera):
    copy = Camera.from_dict(small_camera.to_dict())
    assert copy.shape == small_camera.shape
    assert np.array_equal(copy.world_to_camera, small_camera.world_to_camera)
    assert (copy.fx, copy.cx, copy.cy) == (small_camera.fx, small_camera.cx, small_camera.cy)


def test_from_dict_reports_missing_keys(small_camera):
    record = small_camera.to_dict()
    del record["fx"]
    with pytest.raises(ContractViolation):
        Camera.from_dict(record)
