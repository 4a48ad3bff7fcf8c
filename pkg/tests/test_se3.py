import numpy as np
import pytest

from armstack.se3 import (
    Pose,
    calibrate_camera,
    interpolate_linear,
    pose_compose,
    pose_error,
    pose_inverse,
    quat_from_axis_angle,
    quat_slerp,
    quat_to_rotvec,
    rotation_matrix,
)


def random_pose(rng) -> Pose:
    q = rng.normal(size=4)
    return Pose(q / np.linalg.norm(q), rng.uniform(-2, 2, size=3))


def matrix_oracle(p: Pose) -> np.ndarray:
    """Independent 4x4 homogeneous representation for cross-checking."""
    m = np.eye(4)
    m[:3, :3] = rotation_matrix(p.rotation)
    m[:3, 3] = p.translation
    return m


def test_compose_identity():
    ident = Pose.identity()
    out = pose_compose(ident, ident)
    np.testing.assert_array_equal(out.translation, np.zeros(3))
    np.testing.assert_allclose(out.rotation, [1, 0, 0, 0])


def test_compose_translations():
    a = Pose.from_translation(1, 0, 0)
    b = Pose.from_translation(0, 1, 0)
    out = pose_compose(a, b)
    np.testing.assert_allclose(out.translation, [1, 1, 0])
    np.testing.assert_allclose(out.rotation, [1, 0, 0, 0])


def test_compose_matches_matrix_product():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a, b = random_pose(rng), random_pose(rng)
        got = matrix_oracle(pose_compose(a, b))
        want = matrix_oracle(a) @ matrix_oracle(b)
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_inverse_roundtrip():
    rng = np.random.default_rng(11)
    for _ in range(200):
        a = random_pose(rng)
        ident = pose_compose(a, pose_inverse(a))
        assert np.linalg.norm(ident.translation) < 1e-9
        assert abs(abs(ident.rotation[0]) - 1.0) < 1e-9


def test_quaternion_norm_preserved_over_long_chains():
    rng = np.random.default_rng(3)
    acc = Pose.identity()
    step = random_pose(rng)
    for _ in range(100_000):
        acc = pose_compose(acc, step)
        # keep translation bounded so the test exercises rotation drift
        acc.translation[:] = 0.0
    assert abs(np.linalg.norm(acc.rotation) - 1.0) < 1e-9


def test_rotation_apply_matches_matrix():
    rng = np.random.default_rng(5)
    for _ in range(50):
        p = random_pose(rng)
        v = rng.normal(size=3)
        np.testing.assert_allclose(p.apply(v), rotation_matrix(p.rotation) @ v + p.translation,
                                   atol=1e-12)


def test_interpolate_start_equals_goal():
    p = Pose.from_translation(0.1, 0.2, 0.3)
    for pose in interpolate_linear(p, p, 5):
        np.testing.assert_allclose(pose.translation, p.translation)
        np.testing.assert_allclose(pose.rotation, p.rotation)


def test_interpolate_pure_translation():
    seq = interpolate_linear(Pose.identity(), Pose.from_translation(0, 0, 0.3), 3)
    zs = [pose.translation[2] for pose in seq]
    np.testing.assert_allclose(zs, [0.1, 0.2, 0.3])


def test_interpolate_rotation_midpoint():
    goal = Pose.from_axis_angle([0, 0, 1], np.pi / 2)
    seq = interpolate_linear(Pose.identity(), goal, 2)
    mid = quat_to_rotvec(seq[0].rotation)
    np.testing.assert_allclose(mid, [0, 0, np.pi / 4], atol=1e-12)
    np.testing.assert_allclose(seq[-1].rotation, goal.rotation, atol=1e-12)


def test_interpolate_rejects_zero_steps():
    with pytest.raises(ValueError):
        interpolate_linear(Pose.identity(), Pose.identity(), 0)


def test_slerp_shortest_path():
    a = quat_from_axis_angle([0, 0, 1], 0.1)
    b = -quat_from_axis_angle([0, 0, 1], 0.3)  # same rotation, flipped sign
    mid = quat_slerp(a, b, 0.5)
    np.testing.assert_allclose(quat_to_rotvec(mid), [0, 0, 0.2], atol=1e-12)


def test_pose_error_near_identity():
    a = Pose.from_axis_angle([1, 0, 0], 1e-8, translation=(1e-9, 0, 0))
    dp, drot = pose_error(a, Pose.identity())
    np.testing.assert_allclose(dp, [1e-9, 0, 0])
    np.testing.assert_allclose(drot, [1e-8, 0, 0], rtol=1e-6)


def test_calibrate_identity_inputs():
    out = calibrate_camera(Pose.identity(), Pose.identity())
    np.testing.assert_array_equal(out.translation, np.zeros(3))


def test_calibrate_equal_inputs_give_identity():
    rng = np.random.default_rng(13)
    t = random_pose(rng)
    out = calibrate_camera(t, t)
    assert np.linalg.norm(out.translation) < 1e-12
    assert abs(abs(out.rotation[0]) - 1.0) < 1e-12


def test_calibrate_recovers_ground_truth():
    # synthetic detection: cam_T_tag = (base_T_cam*)^-1 @ base_T_tag
    rng = np.random.default_rng(17)
    for _ in range(300):
        base_t_cam_true = random_pose(rng)
        base_t_tag = random_pose(rng)
        cam_t_tag = pose_compose(pose_inverse(base_t_cam_true), base_t_tag)
        got = calibrate_camera(base_t_tag, cam_t_tag)
        assert np.linalg.norm(got.translation - base_t_cam_true.translation) < 1e-9
        # quaternion sign is a gauge freedom
        assert min(np.linalg.norm(got.rotation - base_t_cam_true.rotation),
                   np.linalg.norm(got.rotation + base_t_cam_true.rotation)) < 1e-9
