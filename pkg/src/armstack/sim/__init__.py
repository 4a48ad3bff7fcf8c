from .scene import (
    CameraSpec,
    GraspModel,
    GripperModel,
    SafetyZone,
    SceneConfig,
    SceneObject,
    Workspace,
    load_scene,
    sample_object_pose,
    scene_from_dict,
)
from .dynamics import (
    CONTINUE,
    CONVERGED,
    Interrupt,
    SimState,
    check_collision,
    grasp_update,
    micro_step,
    step_until_converged,
)
from .env import ArmSimEnv

__all__ = [
    "ArmSimEnv",
    "CameraSpec",
    "CONTINUE",
    "CONVERGED",
    "GraspModel",
    "GripperModel",
    "Interrupt",
    "SafetyZone",
    "SceneConfig",
    "SceneObject",
    "SimState",
    "Workspace",
    "check_collision",
    "grasp_update",
    "load_scene",
    "micro_step",
    "sample_object_pose",
    "scene_from_dict",
    "step_until_converged",
]
