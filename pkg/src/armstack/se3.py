"""SE(3) poses as unit quaternion + translation, plus the small transform
algebra the rest of the stack is built on (composition, inversion, slerp,
linear Cartesian interpolation, camera extrinsic recovery)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _normalize_quat(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64).reshape(4)
    n = float(np.linalg.norm(q))
    if n == 0.0:
        raise ValueError("zero quaternion")
    return q / n


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    # q * (0, v) * q̄, expanded to avoid building intermediate quaternions
    w, x, y, z = q
    u = np.array([x, y, z])
    v = np.asarray(v, dtype=np.float64)
    return v + 2.0 * np.cross(u, np.cross(u, v) + w * v)


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    n = float(np.linalg.norm(axis))
    if n == 0.0:
        return np.array([1.0, 0.0, 0.0, 0.0])
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis / n])


def quat_to_rotvec(q: np.ndarray) -> np.ndarray:
    """Axis * angle, with angle in [0, pi]."""
    q = _normalize_quat(q)
    if q[0] < 0.0:
        q = -q
    w = min(1.0, float(q[0]))
    angle = 2.0 * np.arccos(w)
    s = np.sqrt(max(0.0, 1.0 - w * w))
    if s < 1e-12:
        # small-angle limit: sin(theta/2) ~= theta/2
        return 2.0 * q[1:]
    return q[1:] / s * angle


def quat_slerp(a: np.ndarray, b: np.ndarray, u: float) -> np.ndarray:
    a = _normalize_quat(a)
    b = _normalize_quat(b)
    dot = float(np.dot(a, b))
    if dot < 0.0:  # take the short arc
        b = -b
        dot = -dot
    if dot > 1.0 - 1e-12:
        return _normalize_quat(a + u * (b - a))
    theta = np.arccos(min(1.0, dot))
    s = np.sin(theta)
    return _normalize_quat((np.sin((1.0 - u) * theta) / s) * a + (np.sin(u * theta) / s) * b)


def rotation_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


@dataclass
class Pose:
    """Rigid transform. rotation is a unit quaternion (w, x, y, z),
    translation is meters; renormalized on construction."""

    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.rotation = _normalize_quat(self.rotation)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3).copy()

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @staticmethod
    def from_translation(x: float, y: float, z: float) -> "Pose":
        return Pose(translation=np.array([x, y, z], dtype=np.float64))

    @staticmethod
    def from_axis_angle(axis, angle: float, translation=(0.0, 0.0, 0.0)) -> "Pose":
        return Pose(quat_from_axis_angle(np.asarray(axis, dtype=np.float64), angle),
                    np.asarray(translation, dtype=np.float64))

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = rotation_matrix(self.rotation)
        m[:3, 3] = self.translation
        return m

    def apply(self, point: np.ndarray) -> np.ndarray:
        """Transform a point (or an array of points, shape (..., 3))."""
        p = np.asarray(point, dtype=np.float64)
        if p.ndim == 1:
            return quat_rotate(self.rotation, p) + self.translation
        return p @ rotation_matrix(self.rotation).T + self.translation

    def to_array(self) -> np.ndarray:
        """(w, x, y, z, tx, ty, tz) as float64."""
        return np.concatenate([self.rotation, self.translation])

    @staticmethod
    def from_array(a: np.ndarray) -> "Pose":
        a = np.asarray(a, dtype=np.float64).reshape(7)
        return Pose(a[:4], a[4:])


def pose_compose(a: Pose, b: Pose) -> Pose:
    """Homogeneous-transform product a @ b."""
    return Pose(quat_mul(a.rotation, b.rotation),
                quat_rotate(a.rotation, b.translation) + a.translation)


def pose_inverse(a: Pose) -> Pose:
    qi = quat_conj(a.rotation)
    return Pose(qi, -quat_rotate(qi, a.translation))


def pose_error(target: Pose, actual: Pose) -> tuple[np.ndarray, np.ndarray]:
    """(position error vector, orientation error as axis*angle of
    R_target @ R_actual^T) - the task-space error used by the IK loop."""
    dp = target.translation - actual.translation
    q_err = quat_mul(target.rotation, quat_conj(actual.rotation))
    return dp, quat_to_rotvec(q_err)


def interpolate_linear(start: Pose, goal: Pose, n_steps: int) -> list[Pose]:
    """Straight-line Cartesian path from start to goal.

    Returns n_steps poses at fractions 1/n .. n/n of the way: the start
    itself is not repeated and the last pose equals the goal. Translation
    is linear, rotation is slerped.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    out = []
    for k in range(1, n_steps + 1):
        u = k / n_steps
        out.append(
            Pose(
                quat_slerp(start.rotation, goal.rotation, u),
                (1.0 - u) * start.translation + u * goal.translation,
            )
        )
    return out


def calibrate_camera(base_t_tag: Pose, cam_t_tag: Pose) -> Pose:
    """Camera extrinsics in the robot base frame from a fiducial seen by
    both: base_T_cam = base_T_tag @ (cam_T_tag)^-1."""
    return pose_compose(base_t_tag, pose_inverse(cam_t_tag))
