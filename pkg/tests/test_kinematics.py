import numpy as np
import pytest

from armstack.errors import ConfigError, DimensionMismatch, NoConvergence
from armstack.kinematics import (
    Capsule,
    IkParams,
    Joint,
    KinematicChain,
    builtin_chain,
    fk,
    ik_dls,
    jacobian,
)
from armstack.se3 import Pose, pose_error, quat_from_axis_angle, quat_to_rotvec, rotation_matrix


def random_chain(rng, n_joints=6) -> KinematicChain:
    joints = []
    for _ in range(n_joints):
        axis = rng.normal(size=3)
        q = rng.normal(size=4)
        joints.append(
            Joint(
                offset=Pose(q / np.linalg.norm(q), rng.uniform(-0.3, 0.3, size=3)),
                axis=axis,
                limit_low=-np.pi,
                limit_high=np.pi,
                velocity_limit=2.0,
            )
        )
    return KinematicChain("random", joints, ee_offset=Pose.from_translation(0.05, 0, 0.1))


def fk_matrix_oracle(chain: KinematicChain, q: np.ndarray) -> np.ndarray:
    """EE pose via plain 4x4 homogeneous matrix products."""
    m = np.eye(4)
    for joint, qi in zip(chain.joints, q):
        m = m @ joint.offset.matrix()
        rot = np.eye(4)
        rot[:3, :3] = rotation_matrix(quat_from_axis_angle(joint.axis, qi))
        m = m @ rot
    return m @ chain.ee_offset.matrix()


def test_planar_fk_stretched():
    ch = builtin_chain("planar-2dof")
    np.testing.assert_allclose(fk(ch, [0, 0]).ee.translation, [2, 0, 0], atol=1e-12)


def test_planar_fk_rotated():
    ch = builtin_chain("planar-2dof")
    np.testing.assert_allclose(fk(ch, [np.pi / 2, 0]).ee.translation, [0, 2, 0], atol=1e-12)


def test_fk_matches_matrix_oracle():
    rng = np.random.default_rng(23)
    for _ in range(50):
        ch = random_chain(rng)
        q = rng.uniform(-np.pi, np.pi, size=ch.n_joints)
        want = fk_matrix_oracle(ch, q)
        got = fk(ch, q).ee.matrix()
        np.testing.assert_allclose(got, want, atol=1e-10)


def test_fk_dimension_mismatch():
    ch = builtin_chain("planar-2dof")
    with pytest.raises(DimensionMismatch):
        fk(ch, [0, 0, 0])


def test_jacobian_planar_first_column():
    ch = builtin_chain("planar-2dof")
    jac = jacobian(ch, [0.0, 0.0])
    np.testing.assert_allclose(jac[:3, 0], [0, 2, 0], atol=1e-12)
    np.testing.assert_allclose(jac[3:, 0], [0, 0, 1], atol=1e-12)


def fd_jacobian(chain, q, h=1e-6):
    """Central finite differences of fk, the independent check for the
    geometric Jacobian."""
    n = chain.n_joints
    out = np.zeros((6, n))
    for i in range(n):
        dq = np.zeros(n)
        dq[i] = h
        hi = fk(chain, q + dq).ee
        lo = fk(chain, q - dq).ee
        out[:3, i] = (hi.translation - lo.translation) / (2 * h)
        dp, drot = pose_error(hi, lo)
        out[3:, i] = drot / (2 * h)
    return out


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(29)
    for _ in range(60):
        ch = random_chain(rng)
        q = rng.uniform(-np.pi, np.pi, size=ch.n_joints)
        np.testing.assert_allclose(jacobian(ch, q), fd_jacobian(ch, q), atol=1e-5)


def test_jacobian_zero_lever_arm():
    # EE coincides with the only joint origin -> linear part vanishes
    ch = KinematicChain(
        "pivot", [Joint(Pose.identity(), [0, 0, 1], -np.pi, np.pi, 1.0)], ee_offset=Pose.identity()
    )
    jac = jacobian(ch, [0.3])
    np.testing.assert_allclose(jac[:3, 0], np.zeros(3), atol=1e-12)


def test_ik_already_converged_returns_seed():
    ch = builtin_chain("fr3-like-7dof")
    q0 = ch.home
    out = ik_dls(ch, fk(ch, q0).ee, q0)
    np.testing.assert_array_equal(out, q0)


def test_ik_converges_on_reachable_targets():
    ch = builtin_chain("fr3-like-7dof")
    rng = np.random.default_rng(31)
    lo, hi = ch.limits_low, ch.limits_high
    for _ in range(100):
        q_true = rng.uniform(lo + 0.3, hi - 0.3)
        target = fk(ch, q_true).ee
        q0 = np.clip(q_true + rng.uniform(-0.3, 0.3, size=ch.n_joints), lo, hi)
        q = ik_dls(ch, target, q0)
        residual = np.linalg.norm(fk(ch, q).ee.translation - target.translation)
        assert residual < 1e-6


def test_ik_unreachable_raises():
    ch = builtin_chain("planar-2dof")
    with pytest.raises(NoConvergence) as exc:
        ik_dls(ch, Pose.from_translation(5, 0, 0), np.array([0.1, 0.1]))
    assert exc.value.residual > 1.0


def test_ik_respects_joint_limits():
    ch = builtin_chain("fr3-like-7dof")
    rng = np.random.default_rng(37)
    for _ in range(20):
        q_true = rng.uniform(ch.limits_low + 0.3, ch.limits_high - 0.3)
        q = ik_dls(ch, fk(ch, q_true).ee, np.clip(q_true + 0.2, ch.limits_low, ch.limits_high))
        assert np.all(q >= ch.limits_low - 1e-12)
        assert np.all(q <= ch.limits_high + 1e-12)


def test_ik_params_validation():
    with pytest.raises(ValueError):
        IkParams(damping=0.0)
    with pytest.raises(ValueError):
        IkParams(step_scale=1.5)
    with pytest.raises(ValueError):
        IkParams(position_tolerance=-1.0)


def test_chain_validation():
    with pytest.raises(ConfigError):
        Joint(Pose.identity(), [0, 0, 0], -1, 1, 1.0)  # zero axis
    with pytest.raises(ConfigError):
        Joint(Pose.identity(), [0, 0, 1], 1, -1, 1.0)  # inverted limits
    with pytest.raises(ConfigError):
        KinematicChain("empty", [])


def test_builtin_chain_unknown():
    with pytest.raises(ConfigError):
        builtin_chain("nonexistent-chain")


def test_capsules_present_on_bundled_chains():
    for name in ("planar-2dof", "fr3-like-7dof"):
        ch = builtin_chain(name)
        assert all(j.capsule is not None for j in ch.joints)
        assert all(isinstance(j.capsule, Capsule) for j in ch.joints)
