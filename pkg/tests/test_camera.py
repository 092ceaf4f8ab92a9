import numpy as np
import pytest

from poicast.camera import CameraModel, CameraPose, Pixel, look_at_pose


def test_intrinsic_matrix_identity_case():
    m = CameraModel(fx=1, fy=1, cx=0.5, cy=0.5, width=1, height=1)
    k = m.intrinsic_matrix()
    assert np.allclose(k, [[1, 0, 0.5], [0, 1, 0.5], [0, 0, 1]])


def test_intrinsic_matrix_field_placement():
    m = CameraModel(fx=800, fy=800, cx=640, cy=360, width=1280, height=720)
    assert np.array_equal(
        m.intrinsic_matrix(),
        np.array([[800, 0, 640], [0, 800, 360], [0, 0, 1]], dtype=float),
    )


def test_intrinsic_matrix_invertible():
    rng = np.random.default_rng(0)
    for _ in range(20):
        fx, fy = rng.uniform(50, 2000, 2)
        w, h = rng.integers(100, 4000, 2)
        m = CameraModel(fx=fx, fy=fy, cx=w * 0.5, cy=h * 0.5, width=int(w), height=int(h))
        k = m.intrinsic_matrix()
        assert np.abs(k @ np.linalg.inv(k) - np.eye(3)).max() < 1e-9


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(fx=0, fy=1, cx=0.5, cy=0.5, width=1, height=1),
        dict(fx=1, fy=-1, cx=0.5, cy=0.5, width=1, height=1),
        dict(fx=1, fy=1, cx=0, cy=0.5, width=1, height=1),
        dict(fx=1, fy=1, cx=0.5, cy=2, width=1, height=1),
    ],
)
def test_camera_model_invariants(kwargs):
    with pytest.raises(ValueError):
        CameraModel(**kwargs)


def test_pose_rejects_non_orthonormal():
    r = np.eye(3)
    r[0, 1] = 0.01
    with pytest.raises(ValueError):
        CameraPose(rotation=r, translation=np.zeros(3))


def test_pose_rejects_reflection():
    r = np.diag([1.0, 1.0, -1.0])
    with pytest.raises(ValueError):
        CameraPose(rotation=r, translation=np.zeros(3))


def test_pose_is_immutable():
    p = CameraPose.identity()
    with pytest.raises(ValueError):
        p.rotation[0, 0] = 2.0


def test_identity_quaternion():
    p = CameraPose.from_quaternion(1, 0, 0, 0, 0, 0, 0)
    assert np.allclose(p.rotation, np.eye(3))


def test_quaternion_is_normalized_first():
    # scaling a quaternion must not change the rotation
    a = CameraPose.from_quaternion(1, 2, 3, 4, 0, 0, 0)
    b = CameraPose.from_quaternion(2, 4, 6, 8, 0, 0, 0)
    assert np.allclose(a.rotation, b.rotation)


def test_quaternion_quarter_turn_about_z():
    s = np.sqrt(0.5)
    p = CameraPose.from_quaternion(s, 0, 0, s, 0, 0, 0)
    # +90 degrees about z maps x to y
    assert np.allclose(p.rotation @ np.array([1.0, 0, 0]), [0, 1, 0], atol=1e-12)


def test_camera_center():
    rng = np.random.default_rng(3)
    q = rng.normal(size=4)
    p = CameraPose.from_quaternion(*q, 1.0, -2.0, 3.0)
    c = p.camera_center()
    assert np.allclose(p.rotation @ c + p.translation, 0, atol=1e-12)


def test_look_at_points_camera_at_target():
    pose = look_at_pose(eye=(1, 2, 3), target=(4, 2, 3))
    cam = pose.rotation @ np.array([4.0, 2, 3]) + pose.translation
    assert cam[0] == pytest.approx(0, abs=1e-12)
    assert cam[1] == pytest.approx(0, abs=1e-12)
    assert cam[2] == pytest.approx(3.0)


def test_pixel_inside():
    m = CameraModel(fx=1, fy=1, cx=5, cy=5, width=10, height=10)
    assert Pixel(0, 0).inside(m)
    assert not Pixel(10, 0).inside(m)
    assert not Pixel(-1, 5).inside(m)
