"""Serial-chain kinematics: forward kinematics, geometric Jacobian, and a
damped-least-squares inverse kinematics solver with per-iteration joint
limit projection.

Chains are revolute-only and loaded from a JSON description (see
``load_chain``); two fixtures ship with the package: ``planar-2dof`` and
``fr3-like-7dof``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionMismatch, NoConvergence
from .se3 import Pose, pose_error, quat_from_axis_angle, quat_mul, quat_rotate

FIXTURES_DIR = Path(__file__).parent / "fixtures"


@dataclass
class Capsule:
    """Collision capsule in the owning link's frame."""

    radius: float
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64).reshape(3)
        self.b = np.asarray(self.b, dtype=np.float64).reshape(3)


@dataclass
class Joint:
    """Revolute joint: fixed offset from the parent link frame, then a
    rotation of q radians about ``axis`` (unit vector in the post-offset
    frame)."""

    offset: Pose
    axis: np.ndarray
    limit_low: float
    limit_high: float
    velocity_limit: float
    capsule: Capsule | None = None

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=np.float64).reshape(3)
        n = float(np.linalg.norm(axis))
        if n == 0.0:
            raise ConfigError("joint axis must be non-zero")
        self.axis = axis / n
        if not self.limit_low < self.limit_high:
            raise ConfigError("joint limits must satisfy low < high")
        if self.velocity_limit <= 0.0:
            raise ConfigError("velocity limit must be positive")


@dataclass
class KinematicChain:
    name: str
    joints: list[Joint]
    ee_offset: Pose = field(default_factory=Pose.identity)
    home: np.ndarray | None = None
    # link index pairs whose capsules overlap by construction (rigid
    # assemblies); skipped by self-collision checks
    collision_ignore: frozenset = frozenset()

    def __post_init__(self):
        if not self.joints:
            raise ConfigError("chain needs at least one joint")
        if self.home is None:
            self.home = np.zeros(self.n_joints)
        self.home = np.asarray(self.home, dtype=np.float64).reshape(self.n_joints)
        self.collision_ignore = frozenset(tuple(sorted(p)) for p in self.collision_ignore)

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    @property
    def limits_low(self) -> np.ndarray:
        return np.array([j.limit_low for j in self.joints])

    @property
    def limits_high(self) -> np.ndarray:
        return np.array([j.limit_high for j in self.joints])

    @property
    def velocity_limits(self) -> np.ndarray:
        return np.array([j.velocity_limit for j in self.joints])

    def clamp(self, q: np.ndarray) -> np.ndarray:
        return np.clip(q, self.limits_low, self.limits_high)

    def check_dim(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.n_joints,):
            raise DimensionMismatch(f"expected {self.n_joints} joint values, got shape {q.shape}")
        return q


@dataclass
class FkResult:
    ee: Pose
    link_poses: list[Pose]  # frame of each link after its joint rotation


def fk(chain: KinematicChain, q: np.ndarray) -> FkResult:
    """End-effector and per-link poses in the base frame."""
    q = chain.check_dim(q)
    rot = np.array([1.0, 0.0, 0.0, 0.0])
    trans = np.zeros(3)
    links: list[Pose] = []
    for joint, qi in zip(chain.joints, q):
        # frame = frame ∘ offset ∘ Rot(axis, qi)
        trans = trans + quat_rotate(rot, joint.offset.translation)
        rot = quat_mul(rot, joint.offset.rotation)
        rot = quat_mul(rot, quat_from_axis_angle(joint.axis, qi))
        links.append(Pose(rot, trans))
    ee_trans = trans + quat_rotate(rot, chain.ee_offset.translation)
    ee_rot = quat_mul(rot, chain.ee_offset.rotation)
    return FkResult(Pose(ee_rot, ee_trans), links)


def jacobian(chain: KinematicChain, q: np.ndarray) -> np.ndarray:
    """Geometric Jacobian, 6 x n: rows 0-2 linear (m), rows 3-5 angular (rad),
    expressed in the base frame."""
    q = chain.check_dim(q)
    res = fk(chain, q)
    p_ee = res.ee.translation
    jac = np.zeros((6, chain.n_joints))
    for i, (joint, frame) in enumerate(zip(chain.joints, res.link_poses)):
        # the joint's own rotation leaves its axis invariant, so the world
        # axis can be read from the post-rotation frame
        axis_w = quat_rotate(frame.rotation, joint.axis)
        jac[:3, i] = np.cross(axis_w, p_ee - frame.translation)
        jac[3:, i] = axis_w
    return jac


@dataclass
class IkParams:
    damping: float = 1e-4
    max_iterations: int = 200
    position_tolerance: float = 1e-7
    orientation_tolerance: float = 1e-6
    step_scale: float = 0.8

    def __post_init__(self):
        if self.damping <= 0.0:
            raise ValueError("damping must be > 0")
        if self.position_tolerance <= 0.0 or self.orientation_tolerance <= 0.0:
            raise ValueError("tolerances must be > 0")
        if not 0.0 < self.step_scale <= 1.0:
            raise ValueError("step_scale must be in (0, 1]")


def ik_dls(chain: KinematicChain, target: Pose, q0: np.ndarray,
           params: IkParams | None = None) -> np.ndarray:
    """Damped-least-squares IK: dq = J^T (J J^T + lam^2 I)^-1 e, scaled by
    step_scale, with lam^2 = damping^2 + |e|^2.

    The error-proportional damping term keeps the update stable far from
    the target and, unlike a fixed lam, converges linearly even when the
    solution configuration is near-singular (fixed damping stalls there
    with a sublinear tail).

    Joint limits are enforced by clamping after every update. Raises
    NoConvergence when the tolerances are not met within max_iterations.
    """
    params = params or IkParams()
    q = chain.clamp(chain.check_dim(q0).copy())
    eye6 = np.eye(6)
    residual = np.inf
    for _ in range(params.max_iterations + 1):
        dp, drot = pose_error(target, fk(chain, q).ee)
        residual = float(np.linalg.norm(dp))
        if residual < params.position_tolerance and np.linalg.norm(drot) < params.orientation_tolerance:
            return q
        jac = jacobian(chain, q)
        err = np.concatenate([dp, drot])
        lam2 = params.damping * params.damping + float(err @ err)
        dq = jac.T @ np.linalg.solve(jac @ jac.T + lam2 * eye6, err)
        q = chain.clamp(q + params.step_scale * dq)
    raise NoConvergence(params.max_iterations, residual)


def _pose_from_list(values, where: str) -> Pose:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (7,):
        raise ConfigError(f"{where}: expected 7 numbers (w x y z tx ty tz)")
    return Pose(arr[:4], arr[4:])


def chain_from_dict(data: dict, name: str = "chain") -> KinematicChain:
    try:
        joints = []
        for i, j in enumerate(data["joints"]):
            capsule = None
            if j.get("capsule") is not None:
                c = j["capsule"]
                capsule = Capsule(float(c["radius"]), c["a"], c["b"])
            joints.append(
                Joint(
                    offset=_pose_from_list(j["offset"], f"joints[{i}].offset"),
                    axis=j["axis"],
                    limit_low=float(j["limits"][0]),
                    limit_high=float(j["limits"][1]),
                    velocity_limit=float(j["velocity_limit"]),
                    capsule=capsule,
                )
            )
        return KinematicChain(
            name=data.get("name", name),
            joints=joints,
            ee_offset=_pose_from_list(data["ee_offset"], "ee_offset"),
            home=np.asarray(data["home"], dtype=np.float64) if "home" in data else None,
            collision_ignore=frozenset(tuple(p) for p in data.get("collision_ignore", [])),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed chain definition: {exc}") from exc


def load_chain(path: str | Path) -> KinematicChain:
    """Load a chain definition file (JSON, UTF-8). Schema::

        {
          "name": str,
          "joints": [{"offset": [w,x,y,z,tx,ty,tz], "axis": [x,y,z],
                      "limits": [low, high], "velocity_limit": float,
                      "capsule": {"radius": m, "a": [xyz], "b": [xyz]} | null}],
          "ee_offset": [w,x,y,z,tx,ty,tz],
          "home": [q...],                     # optional, defaults to zeros
          "collision_ignore": [[i, j], ...]   # optional link index pairs
        }
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        data = json.load(fh)
    return chain_from_dict(data, name=path.stem)


def builtin_chain(name: str) -> KinematicChain:
    """Load one of the bundled chains: 'planar-2dof' or 'fr3-like-7dof'."""
    path = FIXTURES_DIR / f"{name.replace('-', '_')}.json"
    if not path.exists():
        raise ConfigError(f"unknown builtin chain {name!r}")
    return load_chain(path)
