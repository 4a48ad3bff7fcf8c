"""Deterministic arm dynamics: first-order joint servos with velocity
limits, gripper travel, attach-on-grasp object handling, the
callback-instrumented convergence loop, and whole-state collision checks.

There is no gravity or contact dynamics: free objects are static, grasped
objects are rigidly parented to the end effector (the pose law
``object = ee ∘ grasp_offset`` holds after every micro-step).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from ..collision import (
    Contact,
    bounding_spheres_overlap,
    capsule_box_depth,
    capsule_capsule_depth,
    capsule_outside_zone_depth,
    capsule_sphere_depth,
)
from ..kinematics import KinematicChain, fk
from ..se3 import Pose, pose_compose, pose_inverse
from ..seeding import SplitMix64, mix
from .scene import SafetyZone, SceneConfig, SceneObject

MICRO_DT = 1.0 / 300.0
JOINT_EPSILON = 1e-3  # rad, convergence
GRIPPER_EPSILON = 1e-4  # m, convergence
WIDTH_EPSILON = 1e-6  # m, closing/opening detection


@dataclass
class SimState:
    q: np.ndarray
    dq: np.ndarray
    gripper_width: float
    gripper_commanded: float
    object_poses: list[Pose]
    attachment: tuple[int, Pose] | None = None  # (object index, grasp offset)
    grasp_attempted: bool = False
    micro_step_index: int = 0
    sim_time: float = 0.0
    episode_seed: int = 0

    def copy(self) -> "SimState":
        return SimState(
            q=self.q.copy(),
            dq=self.dq.copy(),
            gripper_width=self.gripper_width,
            gripper_commanded=self.gripper_commanded,
            object_poses=[Pose(p.rotation, p.translation) for p in self.object_poses],
            attachment=self.attachment,
            grasp_attempted=self.grasp_attempted,
            micro_step_index=self.micro_step_index,
            sim_time=self.sim_time,
            episode_seed=self.episode_seed,
        )


# ---- step callbacks ------------------------------------------------------

CONTINUE = "continue"
CONVERGED = "converged"


@dataclass(frozen=True)
class Interrupt:
    reason: str


StepCallback = Callable[[SimState], object]  # returns CONTINUE/CONVERGED/Interrupt


def micro_step(state: SimState, scene: SceneConfig, joint_targets: np.ndarray,
               gripper_target: float, dt: float = MICRO_DT) -> SimState:
    """One servo update: every joint moves toward its target at most
    velocity_limit * dt; the gripper likewise at the gripper speed. The
    attachment pose law is re-established afterwards."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    chain = scene.chain
    out = state.copy()
    targets = chain.clamp(np.asarray(joint_targets, dtype=np.float64))
    max_dq = chain.velocity_limits * dt
    delta = np.clip(targets - out.q, -max_dq, max_dq)
    out.q = out.q + delta
    out.dq = delta / dt

    out.gripper_commanded = float(np.clip(gripper_target, 0.0, scene.gripper.max_width))
    width_target = out.gripper_commanded
    if out.attachment is not None:
        # fingers cannot close through a held object
        obj = scene.objects[out.attachment[0]]
        width_target = max(width_target, 2.0 * obj.min_half_extent)
    max_dw = scene.gripper.speed * dt
    out.gripper_width += float(np.clip(width_target - out.gripper_width, -max_dw, max_dw))

    out.micro_step_index += 1
    out.sim_time += dt
    _enforce_attachment(out, scene)
    return out


def _enforce_attachment(state: SimState, scene: SceneConfig) -> None:
    if state.attachment is None:
        return
    idx, offset = state.attachment
    ee = fk(scene.chain, state.q).ee
    state.object_poses[idx] = pose_compose(ee, offset)


def grasp_update(state: SimState, scene: SceneConfig) -> SimState:
    """Attach/detach transitions.

    Attach: gripper closing AND a graspable object's center within
    grasp radius of the tool center point AND the commanded width is
    below the object's graspable width. One attempt per closing event;
    with the seeded reliability model enabled an attempt may fail.

    Detach: the gripper opens beyond the held object's width; the object
    keeps its release pose.
    """
    out = state.copy()
    closing = out.gripper_commanded < out.gripper_width - WIDTH_EPSILON
    opening = out.gripper_commanded > out.gripper_width + WIDTH_EPSILON

    if opening:
        out.grasp_attempted = False

    if out.attachment is not None:
        idx, _ = out.attachment
        obj = scene.objects[idx]
        if out.gripper_width > 2.0 * obj.min_half_extent + WIDTH_EPSILON:
            out.attachment = None  # released; pose stays where it is
        return out

    if not closing or out.grasp_attempted:
        return out

    ee = fk(scene.chain, out.q).ee
    for idx, obj in enumerate(scene.objects):
        if not obj.graspable:
            continue
        offset = out.object_poses[idx].translation - ee.translation
        if float(np.linalg.norm(offset)) > scene.grasp.radius:
            continue
        if out.gripper_commanded >= 2.0 * obj.min_half_extent:
            continue
        out.grasp_attempted = True
        if scene.grasp.reliability_enabled:
            lateral = float(np.linalg.norm(offset[:2]))
            p_fail = min(1.0, scene.grasp.base_failure + lateral / scene.grasp.offset_scale)
            draw = SplitMix64(mix(out.episode_seed, out.micro_step_index)).next_float()
            if draw < p_fail:
                return out  # fingers close on nothing this time
        grasp_offset = pose_compose(pose_inverse(ee), out.object_poses[idx])
        out.attachment = (idx, grasp_offset)
        _enforce_attachment(out, scene)
        return out
    return out


def step_until_converged(
    state: SimState,
    scene: SceneConfig,
    joint_targets: np.ndarray,
    gripper_target: float,
    callbacks: Sequence[StepCallback] = (),
    max_micro_steps: int = 3000,
    dt: float = MICRO_DT,
) -> tuple[SimState, object]:
    """Micro-step until joints and gripper are within the convergence
    epsilons of their targets, a callback reports CONVERGED, or a callback
    interrupts. Outcome is CONVERGED, an Interrupt, or "timeout"."""
    if max_micro_steps < 1:
        raise ValueError("max_micro_steps must be >= 1")
    chain = scene.chain
    targets = chain.clamp(np.asarray(joint_targets, dtype=np.float64))
    for _ in range(max_micro_steps):
        state = micro_step(state, scene, targets, gripper_target, dt)
        state = grasp_update(state, scene)
        for cb in callbacks:
            verdict = cb(state)
            if isinstance(verdict, Interrupt):
                return state, verdict
            if verdict == CONVERGED:
                return state, CONVERGED
        width_goal = state.gripper_commanded
        if state.attachment is not None:
            obj = scene.objects[state.attachment[0]]
            width_goal = max(width_goal, 2.0 * obj.min_half_extent)
        if (np.all(np.abs(targets - state.q) < JOINT_EPSILON)
                and abs(width_goal - state.gripper_width) < GRIPPER_EPSILON):
            return state, CONVERGED
    return state, "timeout"


# ---- collision checking --------------------------------------------------


def world_capsules(state: SimState, scene: SceneConfig) -> list[tuple[int, str, np.ndarray, np.ndarray, float]]:
    """(link index, name, endpoint a, endpoint b, radius) capsules in the
    base frame, plus a zero-length 'ee' capsule at the tool center point
    (index = joint count)."""
    res = fk(scene.chain, state.q)
    out = []
    for i, (joint, frame) in enumerate(zip(scene.chain.joints, res.link_poses)):
        if joint.capsule is None:
            continue
        cap = joint.capsule
        out.append((i, f"link{i}", frame.apply(cap.a), frame.apply(cap.b), cap.radius))
    ee_p = res.ee.translation
    out.append((scene.chain.n_joints, "ee", ee_p, ee_p.copy(), 0.03))
    return out


def _capsule_object_depth(a, b, radius, obj: SceneObject, pose: Pose) -> float:
    if obj.shape == "sphere":
        return capsule_sphere_depth(a, b, radius, pose.translation, obj.radius)
    return capsule_box_depth(a, b, radius, pose, obj.half_extents)


def check_collision(state: SimState, scene: SceneConfig,
                    zone: SafetyZone | None = None) -> Contact | None:
    """Deepest contact among link-vs-object, non-adjacent link-vs-link and
    zone containment tests; None when contact-free. A held object is
    excluded from arm tests (it is rigidly parented to the hand)."""
    caps = world_capsules(state, scene)
    attached_idx = state.attachment[0] if state.attachment is not None else None
    ignore = scene.chain.collision_ignore
    deepest: Contact | None = None

    def consider(name_a: str, name_b: str, depth: float):
        nonlocal deepest
        if depth > 0.0 and (deepest is None or depth > deepest.depth):
            deepest = Contact(tuple(sorted((name_a, name_b))), depth)

    for _, name, a, b, r in caps:
        for idx, obj in enumerate(scene.objects):
            if idx == attached_idx:
                continue
            pose = state.object_poses[idx]
            reach = float(np.linalg.norm(obj.half_extents)) if obj.shape == "box" else obj.radius
            if not bounding_spheres_overlap(a, b, r, pose.translation, pose.translation, reach):
                continue
            consider(name, obj.id, _capsule_object_depth(a, b, r, obj, pose))

    for i in range(len(caps)):
        for j in range(i + 1, len(caps)):
            ia, na, a1, b1, r1 = caps[i]
            ib, nb, a2, b2, r2 = caps[j]
            if ib - ia < 2 or (ia, ib) in ignore:  # adjacent or rigid assembly
                continue
            if not bounding_spheres_overlap(a1, b1, r1, a2, b2, r2):
                continue
            consider(na, nb, capsule_capsule_depth(a1, b1, r1, a2, b2, r2))

    if zone is not None:
        for _, name, a, b, _r in caps:
            consider(name, "zone", capsule_outside_zone_depth(a, b, zone.center, zone.half_extents))

    return deepest
