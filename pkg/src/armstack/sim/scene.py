"""Scene description: objects, workspace sampling region, safety zone,
cameras, gripper/grasp parameters, and the arm model reference.

Scenes are JSON files (UTF-8); ``load_scene`` documents the schema. A
bundled ``pick-cuboid`` scene ships as a fixture.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..kinematics import FIXTURES_DIR, KinematicChain, builtin_chain, load_chain
from ..se3 import Pose, quat_from_axis_angle
from ..seeding import SplitMix64


@dataclass
class SceneObject:
    id: str
    shape: str  # "box" | "sphere"
    pose: Pose
    half_extents: np.ndarray | None = None  # boxes
    radius: float | None = None  # spheres
    color: tuple[float, float, float] = (0.7, 0.7, 0.7)
    graspable: bool = False
    randomize: bool = False  # re-sample pose from the workspace on reset

    def __post_init__(self):
        if self.shape not in ("box", "sphere"):
            raise ConfigError(f"object {self.id!r}: unknown shape {self.shape!r}")
        if self.shape == "box":
            if self.half_extents is None:
                raise ConfigError(f"object {self.id!r}: box needs half_extents")
            self.half_extents = np.asarray(self.half_extents, dtype=np.float64).reshape(3)
        if self.shape == "sphere" and (self.radius is None or self.radius <= 0):
            raise ConfigError(f"object {self.id!r}: sphere needs positive radius")

    @property
    def min_half_extent(self) -> float:
        if self.shape == "box":
            return float(np.min(self.half_extents))
        return float(self.radius)


@dataclass
class Workspace:
    """Sampling region for randomized objects: a rectangle on the table."""

    x_range: tuple[float, float]
    y_range: tuple[float, float]
    yaw_range: tuple[float, float] = (-np.pi, np.pi)
    z: float = 0.0  # object center height when placed

    def __post_init__(self):
        for name, (lo, hi) in (("x_range", self.x_range), ("y_range", self.y_range),
                               ("yaw_range", self.yaw_range)):
            if not lo < hi:
                raise ConfigError(f"workspace {name} degenerate: [{lo}, {hi}]")


@dataclass
class SafetyZone:
    center: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64).reshape(3)
        self.half_extents = np.asarray(self.half_extents, dtype=np.float64).reshape(3)


@dataclass
class CameraSpec:
    name: str
    fx: float
    fy: float
    cx: float
    cy: float
    height: int
    width: int
    pose: Pose  # base_T_cam
    with_depth: bool = True

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigError(f"camera {self.name!r}: focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ConfigError(f"camera {self.name!r}: principal point outside image")


@dataclass
class GripperModel:
    max_width: float = 0.08
    speed: float = 0.15  # m/s


@dataclass
class GraspModel:
    radius: float = 0.03  # attach reach around the tool center point
    reliability_enabled: bool = False
    # seeded reliability model (emulates contact uncertainty): an attach
    # attempt fails with probability base_failure + offset/offset_scale
    base_failure: float = 0.25
    offset_scale: float = 0.04


@dataclass
class SceneConfig:
    chain: KinematicChain
    objects: list[SceneObject]
    workspace: Workspace
    zone: SafetyZone | None = None
    cameras: list[CameraSpec] = field(default_factory=list)
    gripper: GripperModel = field(default_factory=GripperModel)
    grasp: GraspModel = field(default_factory=GraspModel)
    ground_color: tuple[float, float, float] | None = (0.85, 0.82, 0.75)
    name: str = "scene"

    def object_index(self, object_id: str) -> int:
        for i, obj in enumerate(self.objects):
            if obj.id == object_id:
                return i
        raise KeyError(object_id)


def sample_object_pose(seed: int, workspace: Workspace) -> Pose:
    """Uniform position in the workspace rectangle at table height plus a
    uniform yaw; three splitmix64 draws in x, y, yaw order."""
    rng = SplitMix64(seed)
    x = rng.uniform(*workspace.x_range)
    y = rng.uniform(*workspace.y_range)
    yaw = rng.uniform(*workspace.yaw_range)
    return Pose(quat_from_axis_angle([0.0, 0.0, 1.0], yaw), np.array([x, y, workspace.z]))


def _pose_from(v, where: str) -> Pose:
    arr = np.asarray(v, dtype=np.float64)
    if arr.shape != (7,):
        raise ConfigError(f"{where}: pose needs 7 numbers (w x y z tx ty tz)")
    return Pose(arr[:4], arr[4:])


def scene_from_dict(data: dict, base_dir: Path | None = None, name: str = "scene") -> SceneConfig:
    try:
        chain_ref = data["chain"]
        chain_path = Path(chain_ref)
        if not chain_path.is_absolute() and base_dir is not None and (base_dir / chain_path).exists():
            chain = load_chain(base_dir / chain_path)
        elif chain_path.suffix == ".json" and chain_path.exists():
            chain = load_chain(chain_path)
        else:
            chain = builtin_chain(chain_ref)

        objects = []
        for od in data.get("objects", []):
            objects.append(
                SceneObject(
                    id=od["id"],
                    shape=od["shape"],
                    pose=_pose_from(od["pose"], f"object {od['id']}"),
                    half_extents=od.get("half_extents"),
                    radius=od.get("radius"),
                    color=tuple(od.get("color", (0.7, 0.7, 0.7))),
                    graspable=bool(od.get("graspable", False)),
                    randomize=bool(od.get("randomize", False)),
                )
            )
        ws = data["workspace"]
        workspace = Workspace(
            x_range=tuple(ws["x_range"]),
            y_range=tuple(ws["y_range"]),
            yaw_range=tuple(ws.get("yaw_range", (-np.pi, np.pi))),
            z=float(ws.get("z", 0.0)),
        )
        zone = None
        if data.get("safety_zone") is not None:
            zd = data["safety_zone"]
            zone = SafetyZone(zd["center"], zd["half_extents"])
        cameras = []
        for cd in data.get("cameras", []):
            cameras.append(
                CameraSpec(
                    name=cd["name"],
                    fx=float(cd["fx"]), fy=float(cd["fy"]),
                    cx=float(cd["cx"]), cy=float(cd["cy"]),
                    height=int(cd["height"]), width=int(cd["width"]),
                    pose=_pose_from(cd["pose"], f"camera {cd['name']}"),
                    with_depth=bool(cd.get("with_depth", True)),
                )
            )
        gr = data.get("gripper", {})
        gripper = GripperModel(max_width=float(gr.get("max_width", 0.08)),
                               speed=float(gr.get("speed", 0.15)))
        gd = data.get("grasp", {})
        grasp = GraspModel(
            radius=float(gd.get("radius", 0.03)),
            reliability_enabled=bool(gd.get("reliability_enabled", False)),
            base_failure=float(gd.get("base_failure", 0.25)),
            offset_scale=float(gd.get("offset_scale", 0.04)),
        )
        ground = data.get("ground_color", (0.85, 0.82, 0.75))
        return SceneConfig(
            chain=chain,
            objects=objects,
            workspace=workspace,
            zone=zone,
            cameras=cameras,
            gripper=gripper,
            grasp=grasp,
            ground_color=tuple(ground) if ground is not None else None,
            name=data.get("name", name),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed scene config: {exc}") from exc


def load_scene(path: str | Path) -> SceneConfig:
    """Load a scene file (JSON). Schema::

        {
          "name": str,
          "chain": "fr3-like-7dof" | "path/to/chain.json",
          "objects": [{"id": str, "shape": "box"|"sphere",
                       "pose": [w,x,y,z,tx,ty,tz],
                       "half_extents": [x,y,z] | "radius": m,
                       "color": [r,g,b], "graspable": bool,
                       "randomize": bool}],
          "workspace": {"x_range": [lo,hi], "y_range": [lo,hi],
                        "yaw_range": [lo,hi], "z": m},
          "safety_zone": {"center": [xyz], "half_extents": [xyz]} | null,
          "cameras": [{"name": str, "fx","fy","cx","cy": px,
                       "height","width": px, "pose": [7], "with_depth": bool}],
          "gripper": {"max_width": m, "speed": m/s},
          "grasp": {"radius": m, "reliability_enabled": bool,
                    "base_failure": p, "offset_scale": m},
          "ground_color": [r,g,b] | null
        }
    """
    path = Path(path)
    if path.suffix != ".json" and not path.exists():
        builtin = FIXTURES_DIR / f"{str(path).replace('-', '_')}_scene.json"
        if builtin.exists():
            path = builtin
    try:
        with path.open("r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scene file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scene file {path} is not valid JSON: {exc}") from exc
    return scene_from_dict(data, base_dir=path.parent, name=path.stem)


def builtin_scene(name: str) -> SceneConfig:
    path = FIXTURES_DIR / f"{name.replace('-', '_')}_scene.json"
    if not path.exists():
        raise ConfigError(f"unknown builtin scene {name!r}")
    return load_scene(path)
