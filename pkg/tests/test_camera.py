import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robovdi.camera import (
    BehindCameraError, CameraModel, camera_to_dict, deproject, dump_camera, gl_projection_matrix,
    load_camera, look_at, pixel_rays, project, project_camera,
)
from robovdi.errors import ConfigError
from robovdi.transforms import RigidTransform

CONFIG = """
width: 640
height: 480
fx: 600
fy: 600
cx: 320
cy: 240
near: {near}
far: {far}
pose: [0, 0, 0, {qw}, 0, 0, 0]
"""


def test_project_examples(cam640):
    assert project(cam640, (0, 0, 1)) == (320.0, 240.0, 1.0)
    assert project(cam640, (0.1, 0, 1)) == pytest.approx((380.0, 240.0, 1.0), abs=1e-12)
    assert project(cam640, (0, -0.2, 2))[1] == pytest.approx(180.0)


def test_behind_camera(cam640):
    with pytest.raises(BehindCameraError):
        project(cam640, (0, 0, -1))
    with pytest.raises(BehindCameraError):
        project(cam640, (0.3, 0, 0))


def test_deproject_examples(cam640):
    np.testing.assert_allclose(deproject(cam640, 320, 240, 2.0), [0, 0, 2])
    np.testing.assert_allclose(deproject(cam640, 380, 240, 1.0), [0.1, 0, 1], atol=1e-15)
    for bad in (0.0, -1.0, float("nan"), float("inf")):
        with pytest.raises(ValueError):
            deproject(cam640, 10, 10, bad)


def test_load_camera_range():
    cam = load_camera(CONFIG.format(near=0.5, far=3, qw=1))
    assert (cam.near, cam.far) == (0.5, 3.0)
    with pytest.raises(ConfigError, match="near"):
        load_camera(CONFIG.format(near=3, far=0.5, qw=1))


def test_load_camera_rejects_non_unit_quaternion():
    with pytest.raises(ConfigError, match="unit"):
        load_camera(CONFIG.format(near=0.5, far=3, qw=2))


def test_load_camera_missing_field():
    with pytest.raises(ConfigError, match="fx"):
        load_camera("width: 10\nheight: 10\n")


def test_camera_config_round_trip():
    cam = CameraModel(320, 240, 300, 310, 150, 125, 0.3, 4.0,
                      RigidTransform.from_rpy((0.1, -0.2, 0.3), (1, 2, 3)))
    back = load_camera(dump_camera(cam))
    assert camera_to_dict(back)["pose"] == pytest.approx(camera_to_dict(cam)["pose"], abs=1e-12)
    assert back.world_to_camera.is_close(cam.world_to_camera, atol=1e-12)
    assert (back.fx, back.fy, back.cx, back.cy) == (300, 310, 150, 125)


def test_round_trip_1000_samples(rng):
    cam = CameraModel(640, 480, 600, 580, 310, 250, 0.5, 3.0,
                      look_at((2, 1, 1.5), (0, 0, 0.5)))
    for _ in range(1000):
        u, v = rng.uniform(0, 640), rng.uniform(0, 480)
        z = rng.uniform(0.5, 3.0)
        p_world = cam.camera_to_world.apply(deproject(cam, u, v, z))
        pu, pv, pz = project(cam, p_world)
        assert abs(pu - u) < 1e-9 and abs(pv - v) < 1e-9 and abs(pz - z) < 1e-9


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.5, 3), st.sampled_from([0.5, 2.0, 3.0]))
def test_scale_covariance(x, y, z, k):
    cam = CameraModel(640, 480, 600, 600, 320, 240)
    u, v, _ = project_camera(cam, (x, y, z))
    su, sv, _ = project_camera(cam.scaled(k), (x, y, z))
    assert su == pytest.approx(k * u, abs=1e-9)
    assert sv == pytest.approx(k * v, abs=1e-9)


def test_gl_matrix_matches_when_centered(cam640, rng):
    P = gl_projection_matrix(cam640)
    for _ in range(100):
        p = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 3)])
        # GL looks down -Z with +Y up
        clip = P @ np.array([p[0], -p[1], -p[2], 1.0])
        ndc = clip[:3] / clip[3]
        u = (ndc[0] + 1) * cam640.width / 2
        v = (1 - ndc[1]) * cam640.height / 2
        pu, pv, _ = project_camera(cam640, p)
        assert u == pytest.approx(pu, abs=1e-9) and v == pytest.approx(pv, abs=1e-9)
    near = P @ np.array([0, 0, -cam640.near, 1.0])
    far = P @ np.array([0, 0, -cam640.far, 1.0])
    assert near[2] / near[3] == pytest.approx(-1)
    assert far[2] / far[3] == pytest.approx(1)


def test_gl_matrix_differs_off_center():
    cam = CameraModel(640, 480, 600, 600, 300, 240)
    P = gl_projection_matrix(cam)
    clip = P @ np.array([0.1, 0.0, -1.0, 1.0])
    assert (clip[0] / clip[3] + 1) * 320 != pytest.approx(project_camera(cam, (0.1, 0, 1))[0])


def test_pixel_centers_and_rays(cam640):
    rays = pixel_rays(cam640)
    assert rays.shape == (480, 640, 3)
    np.testing.assert_array_equal(rays[240, 320], [0, 0, 1])
    np.testing.assert_allclose(rays[0, 0], [-320 / 600, -240 / 600, 1])


def test_look_at_axes():
    tf = look_at((2, 0, 0), (0, 0, 0))
    # target straight ahead, world up maps to image up (negative camera y)
    np.testing.assert_allclose(tf.apply([0, 0, 0]), [0, 0, 2], atol=1e-15)
    assert tf.apply([2, 0, 1])[1] == pytest.approx(-1)
    with pytest.raises(ValueError):
        look_at((0, 0, 2), (0, 0, 0))


@pytest.mark.parametrize("kwargs", [
    dict(width=0), dict(fx=-1), dict(cx=700), dict(near=0), dict(far=float("inf")),
])
def test_camera_validation(kwargs):
    base = dict(width=640, height=480, fx=600, fy=600, cx=320, cy=240, near=0.5, far=3.0)
    base.update(kwargs)
    with pytest.raises(ConfigError):
        CameraModel(**base)


def test_quarter_turn_pose():
    # camera rotated so it looks along world +X
    w2c = RigidTransform.from_rpy((0, math.pi / 2, 0)).inverse()
    cam = CameraModel(640, 480, 600, 600, 320, 240, world_to_camera=w2c)
    u, v, z = project(cam, (1.5, 0, 0))
    assert (u, v) == pytest.approx((320, 240), abs=1e-9)
    assert z == pytest.approx(1.5)
