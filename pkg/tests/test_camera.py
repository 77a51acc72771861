import numpy as np
import pytest

from gvgeom.camera import (
    CameraRig,
    backproject,
    camera_to_ego,
    ego_to_camera,
    ground_depth_at_pixel,
    ground_normal_camera,
    horizon_row,
    project,
    rig_from_dict,
    rig_to_dict,
    rotation_from_pitch,
)

from tutil import example_rig, random_rig


class TestRotationFromPitch:
    def test_zero_pitch(self):
        expected = np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=float)
        assert np.array_equal(rotation_from_pitch(0.0), expected)

    def test_pi_over_six_second_row(self):
        row = rotation_from_pitch(np.pi / 6)[1]
        assert np.allclose(row, [0.0, 0.5, -0.8660254037844387], atol=1e-12)

    def test_orthonormal_for_random_angles(self):
        rng = np.random.default_rng(0)
        for theta in rng.uniform(-np.pi / 2 + 1e-3, np.pi / 2 - 1e-3, 1000):
            r = rotation_from_pitch(theta)
            assert np.abs(r @ r.T - np.eye(3)).max() < 1e-12
            assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)


class TestEgoToCamera:
    def test_ground_point_ahead(self):
        rig = example_rig()
        p = ego_to_camera([0.0, 5.0, 0.0], rig)
        assert np.allclose(p, [0.0, 1.5, 5.0], atol=1e-12)

    def test_ego_origin(self):
        rig = example_rig()
        assert np.allclose(ego_to_camera([0.0, 0.0, 0.0], rig), [0.0, 1.5, 0.0])

    def test_ground_points_satisfy_plane_equation(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            rig = random_rig(rng)
            pts = np.stack([rng.uniform(-20, 20, 32), rng.uniform(1, 60, 32),
                            np.zeros(32)], axis=-1)
            cam = ego_to_camera(pts, rig)
            residual = cam @ ground_normal_camera(rig) + rig.h
            assert np.abs(residual).max() < 1e-12

    def test_round_trip_with_camera_to_ego(self):
        rng = np.random.default_rng(2)
        rig = random_rig(rng)
        pts = rng.uniform(-10, 10, (64, 3))
        back = camera_to_ego(ego_to_camera(pts, rig), rig)
        assert np.abs(back - pts).max() < 1e-12


class TestGroundDepth:
    def test_bottom_row_flat_rig(self):
        rig = example_rig()
        assert ground_depth_at_pixel(0, 399, rig) == pytest.approx(
            5.276381909547739, rel=1e-12)

    def test_horizon_row_is_invalid(self):
        rig = example_rig()
        assert np.isnan(ground_depth_at_pixel(0, 200, rig))
        assert np.isnan(ground_depth_at_pixel(0, 100, rig))  # above horizon

    def test_small_negative_pitch(self):
        rig = example_rig(theta=-0.01)
        assert ground_depth_at_pixel(0, 399, rig) == pytest.approx(
            5.097336469716031, rel=1e-12)

    def test_never_negative(self):
        rig = example_rig(theta=0.02)
        v = np.linspace(0, rig.H - 1, 4000)
        d = ground_depth_at_pixel(np.zeros_like(v), v, rig)
        assert np.all(d[np.isfinite(d)] > 0)

    def test_d_max_cap(self):
        rig = example_rig()
        v = horizon_row(rig) + 0.01  # enormous depth just below the horizon
        assert np.isfinite(ground_depth_at_pixel(0, v, rig))
        assert np.isnan(ground_depth_at_pixel(0, v, rig, d_max_cap=80.0))

    def test_monotone_decreasing_in_v(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            rig = random_rig(rng)
            v = np.linspace(horizon_row(rig) + 0.5, rig.H - 1, 500)
            d = ground_depth_at_pixel(np.zeros_like(v), v, rig)
            assert np.all(np.diff(d) < 0)

    def test_matches_ray_plane_intersection(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            rig = random_rig(rng)
            v = rng.uniform(horizon_row(rig) + 0.1, rig.H - 1, 256)
            u = rng.uniform(0, rig.W - 1, 256)
            kinv = np.linalg.inv(rig.intrinsic_matrix())
            dirs = np.stack([u, v, np.ones_like(u)], axis=-1) @ kinv.T
            n = rotation_from_pitch(rig.theta) @ np.array([0.0, 0.0, 1.0])
            t = -rig.h / (dirs @ n)
            oracle = t * dirs[:, 2]
            closed = ground_depth_at_pixel(u, v, rig)
            assert (np.abs(closed - oracle) / oracle).max() < 1e-9


class TestBackproject:
    def test_principal_ray(self):
        rig = example_rig()
        assert np.allclose(backproject(rig.cx, rig.cy, 10.0, rig), [0, 0, 10])

    def test_unit_slope_ray(self):
        rig = example_rig()
        p = backproject(rig.cx + rig.fx, rig.cy, 10.0, rig)
        assert np.allclose(p, [10.0, 0.0, 10.0], atol=1e-12)

    def test_project_round_trip(self):
        rng = np.random.default_rng(5)
        rig = random_rig(rng)
        u = rng.uniform(0, rig.W - 1, 128)
        v = rng.uniform(0, rig.H - 1, 128)
        z = rng.uniform(0.5, 70, 128)
        uu, vv = project(backproject(u, v, z, rig), rig)
        assert np.abs(uu - u).max() < 1e-9
        assert np.abs(vv - v).max() < 1e-9


class TestHorizonRow:
    def test_zero_pitch(self):
        rig = example_rig()
        assert horizon_row(rig) == rig.cy

    def test_positive_pitch(self):
        rig = example_rig(theta=0.01)
        assert horizon_row(rig) == pytest.approx(207.00023334266706, rel=1e-12)

    def test_pole_approach(self):
        rig = example_rig()
        d = ground_depth_at_pixel(0, horizon_row(rig) + 1e-4, rig)
        assert d > 1e6


class TestCameraRigValidation:
    @pytest.mark.parametrize("kwargs", [
        dict(fx=-1.0), dict(fy=0.0), dict(H=0), dict(W=0),
        dict(h=0.0), dict(h=-2.0), dict(theta=2.0),
    ])
    def test_invalid_parameters(self, kwargs):
        with pytest.raises(ValueError):
            example_rig(**kwargs)


def test_rig_dict_round_trip_uses_degrees():
    rig = example_rig(theta=np.radians(-0.664))
    d = rig_to_dict(rig)
    assert d["pitch_deg"] == pytest.approx(-0.664, abs=1e-12)
    assert d["height_m"] == 1.5
    back = rig_from_dict(d)
    assert back == rig
