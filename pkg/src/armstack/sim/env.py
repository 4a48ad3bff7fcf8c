"""Base environment over the built-in simulator.

Two control variants: absolute joint targets, or Cartesian end-effector
deltas resolved through IK each control step. Stepping modes:

* "fixed": every control step runs exactly micro_steps_per_control servo
  updates (a constant-duration 30 Hz tick by default), so recorded
  timestamps are uniform;
* "converge": a control step micro-steps until joints and gripper reach
  their targets, a callback interrupts, or max_micro_steps elapses.

Interrupt callbacks are honored in both modes.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..core import Action, Environment, Observation, StepResult, _check_action
from ..errors import NoConvergence, NotReset
from ..kinematics import IkParams, fk, ik_dls
from ..se3 import Pose, pose_compose, pose_inverse, quat_from_axis_angle, quat_mul
from ..seeding import mix
from ..spaces import ScalarBox, SpaceDescriptor, VectorBox, pose7_leaf
from .dynamics import (
    CONVERGED,
    MICRO_DT,
    Interrupt,
    SimState,
    grasp_update,
    micro_step,
    step_until_converged,
)
from .scene import CameraSpec, SceneConfig, sample_object_pose

CART_DELTA_LOW = (-0.05, -0.05, -0.05, -0.2, -0.2, -0.2)
CART_DELTA_HIGH = (0.05, 0.05, 0.05, 0.2, 0.2, 0.2)


class ArmSimEnv(Environment):
    def __init__(
        self,
        scene: SceneConfig,
        control: str = "joint_target",
        mode: str = "fixed",
        control_rate_hz: float = 30.0,
        max_episode_steps: int | None = None,
        max_micro_steps: int = 3000,
        dt: float = MICRO_DT,
    ):
        if control not in ("joint_target", "cartesian_delta"):
            raise ValueError(f"unknown control variant {control!r}")
        if mode not in ("fixed", "converge"):
            raise ValueError(f"unknown step mode {mode!r}")
        self.scene = scene
        self.chain = scene.chain
        self.control = control
        self.mode = mode
        self.control_rate_hz = control_rate_hz
        self.dt = dt
        self.micro_steps_per_control = max(1, round(1.0 / (control_rate_hz * dt)))
        self.max_episode_steps = max_episode_steps
        self.max_micro_steps = max_micro_steps
        self._callbacks: list[Callable] = []
        self._state: SimState | None = None
        self._step_count = 0
        self._renderer = None

        n = self.chain.n_joints
        vmax = self.chain.velocity_limits
        obs_entries = {
            "joint_positions": VectorBox(n, tuple(self.chain.limits_low), tuple(self.chain.limits_high), unit="rad"),
            "joint_velocities": VectorBox(n, tuple(-vmax), tuple(vmax), unit="rad/s"),
            "ee_pose": pose7_leaf(3.0),
            "grasp_active": ScalarBox(0.0, 1.0, unit="bool"),
        }
        for obj in scene.objects:
            obs_entries[f"{obj.id}_pose"] = pose7_leaf(3.0)
        self._obs_space = SpaceDescriptor(obs_entries)

        if control == "joint_target":
            act = {"joint_target": VectorBox(n, tuple(self.chain.limits_low),
                                             tuple(self.chain.limits_high), unit="rad")}
        else:
            act = {"cartesian_delta": VectorBox(6, CART_DELTA_LOW, CART_DELTA_HIGH,
                                                unit="m,rad", semantics="delta_twist")}
        self._act_space = SpaceDescriptor(act)

    # ---- Environment interface ------------------------------------------

    @property
    def observation_space(self) -> SpaceDescriptor:
        return self._obs_space

    @property
    def action_space(self) -> SpaceDescriptor:
        return self._act_space

    def reset(self, seed: int) -> Observation:
        poses = []
        for idx, obj in enumerate(self.scene.objects):
            if obj.randomize:
                poses.append(sample_object_pose(mix(seed, idx), self.scene.workspace))
            else:
                poses.append(Pose(obj.pose.rotation, obj.pose.translation))
        self._state = SimState(
            q=self.chain.home.copy(),
            dq=np.zeros(self.chain.n_joints),
            gripper_width=self.scene.gripper.max_width,
            gripper_commanded=self.scene.gripper.max_width,
            object_poses=poses,
            episode_seed=seed,
        )
        self._step_count = 0
        self._cart_target = fk(self.chain, self._state.q).ee
        self._joint_targets = self._state.q.copy()
        return self._observe()

    def step(self, action: Action) -> StepResult:
        if self._state is None:
            raise NotReset("sim env")
        action = _check_action(self._act_space, action)
        clamped, changed = self._act_space.clamp(action)
        info: dict = {}
        if changed:
            info["clamped"] = True

        if self.control == "joint_target":
            self._joint_targets = np.asarray(clamped["joint_target"], dtype=np.float64)
        else:
            delta = np.asarray(clamped["cartesian_delta"], dtype=np.float64)
            angle = float(np.linalg.norm(delta[3:]))
            rot = quat_from_axis_angle(delta[3:] if angle > 0 else np.array([0.0, 0.0, 1.0]), angle)
            self._cart_target = Pose(quat_mul(rot, self._cart_target.rotation),
                                     self._cart_target.translation + delta[:3])
            try:
                self._joint_targets = ik_dls(self.chain, self._cart_target, self._state.q,
                                             IkParams(max_iterations=60, position_tolerance=1e-5,
                                                      orientation_tolerance=1e-4))
            except NoConvergence:
                info["ik_failed"] = True  # hold previous targets

        outcome = self._run_micro_steps(info)
        self._step_count += 1
        obs = self._observe()
        truncated = (self.max_episode_steps is not None
                     and self._step_count >= self.max_episode_steps)
        info["outcome"] = outcome
        info["sim_time"] = self._state.sim_time
        return StepResult(obs, 0.0, False, truncated, info)

    # ---- stepping internals ----------------------------------------------

    def _run_micro_steps(self, info: dict) -> str:
        state = self._state
        if self.mode == "converge":
            state, outcome = step_until_converged(
                state, self.scene, self._joint_targets, state.gripper_commanded,
                callbacks=self._callbacks, max_micro_steps=self.max_micro_steps, dt=self.dt,
            )
            self._state = state
            if isinstance(outcome, Interrupt):
                info["interrupt_reason"] = outcome.reason
                return "interrupted"
            return "converged" if outcome == CONVERGED else "timeout"

        for _ in range(self.micro_steps_per_control):
            state = micro_step(state, self.scene, self._joint_targets,
                               state.gripper_commanded, self.dt)
            state = grasp_update(state, self.scene)
            interrupted = None
            for cb in self._callbacks:
                verdict = cb(state)
                if isinstance(verdict, Interrupt):
                    interrupted = verdict
                    break
            if interrupted is not None:
                self._state = state
                info["interrupt_reason"] = interrupted.reason
                return "interrupted"
        self._state = state
        return "tick"

    def _observe(self) -> Observation:
        state = self._state
        res = fk(self.chain, state.q)
        channels = {
            "joint_positions": state.q.copy(),
            "joint_velocities": state.dq.copy(),
            "ee_pose": res.ee.to_array(),
            "grasp_active": 1.0 if state.attachment is not None else 0.0,
        }
        for obj, pose in zip(self.scene.objects, state.object_poses):
            channels[f"{obj.id}_pose"] = pose.to_array()
        return Observation(channels, self._step_count)

    # ---- actuator / sensor interfaces used by wrappers --------------------

    @property
    def state(self) -> SimState:
        if self._state is None:
            raise NotReset("sim env")
        return self._state

    @property
    def gripper_max_width(self) -> float:
        return self.scene.gripper.max_width

    @property
    def gripper_width(self) -> float:
        return self.state.gripper_width

    def set_gripper_command(self, width: float) -> None:
        self.state.gripper_commanded = float(np.clip(width, 0.0, self.scene.gripper.max_width))

    def add_callback(self, cb: Callable) -> None:
        self._callbacks.append(cb)

    def remove_callback(self, cb: Callable) -> None:
        self._callbacks.remove(cb)

    def fk_result(self):
        return fk(self.chain, self.state.q)

    def hold_action(self) -> Action:
        """Action that keeps the arm where it is under either control
        variant (the safety gate's veto and the bridge's fail-safe)."""
        if self.control == "joint_target":
            return {"joint_target": self.state.q.copy()}
        return {"cartesian_delta": np.zeros(6)}

    def sync_state(self, q: np.ndarray, dq: np.ndarray, gripper_width: float,
                   gripper_commanded: float, object_poses: list[Pose],
                   attached: bool) -> None:
        """Overwrite the dynamic state (used to resynchronize a shadow
        twin from an observation)."""
        state = self.state
        state.q = np.asarray(q, dtype=np.float64).copy()
        state.dq = np.asarray(dq, dtype=np.float64).copy()
        state.gripper_width = float(gripper_width)
        state.gripper_commanded = float(gripper_commanded)
        state.object_poses = [Pose(p.rotation, p.translation) for p in object_poses]
        ee = fk(self.chain, state.q).ee
        if attached:
            graspable = [i for i, o in enumerate(self.scene.objects) if o.graspable]
            if graspable:
                idx = min(graspable,
                          key=lambda i: float(np.linalg.norm(
                              state.object_poses[i].translation - ee.translation)))
                state.attachment = (idx, pose_compose(pose_inverse(ee), state.object_poses[idx]))
        else:
            state.attachment = None
        self._cart_target = ee
        self._joint_targets = state.q.copy()

    def render_camera(self, camera: CameraSpec) -> tuple[np.ndarray, np.ndarray]:
        from ..render import render_scene_camera

        return render_scene_camera(camera, self.state, self.scene)
