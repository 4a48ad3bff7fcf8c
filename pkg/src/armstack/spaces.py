"""Typed named-channel spaces for observations and actions.

A SpaceDescriptor is a flat mapping of channel name -> leaf. Leaves carry
bounds/shape metadata, a unit string, and (for action channels) a
``semantics`` tag used by the dataset downsampler: "absolute" targets are
re-sampled, "delta_additive" deltas are summed, "delta_twist" deltas are
composed as small rigid transforms.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping

import numpy as np

from .errors import SpaceMismatch


@dataclass(frozen=True)
class ScalarBox:
    low: float
    high: float
    unit: str = ""
    semantics: str = "absolute"

    def __post_init__(self):
        if not self.low <= self.high:
            raise ValueError(f"scalar bounds inverted: {self.low} > {self.high}")


@dataclass(frozen=True)
class VectorBox:
    dim: int
    low: tuple
    high: tuple
    unit: str = ""
    semantics: str = "absolute"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("vector dim must be >= 1")
        object.__setattr__(self, "low", tuple(float(x) for x in np.broadcast_to(self.low, (self.dim,))))
        object.__setattr__(self, "high", tuple(float(x) for x in np.broadcast_to(self.high, (self.dim,))))
        if any(l > h for l, h in zip(self.low, self.high)):
            raise ValueError("vector bounds inverted")

    @property
    def low_array(self) -> np.ndarray:
        return np.asarray(self.low)

    @property
    def high_array(self) -> np.ndarray:
        return np.asarray(self.high)


@dataclass(frozen=True)
class Image:
    height: int
    width: int
    channels: int
    element_kind: str = "u8"  # "u8" or "f32"

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.channels < 1:
            raise ValueError("image dims must be >= 1")
        if self.element_kind not in ("u8", "f32"):
            raise ValueError(f"unknown element kind {self.element_kind!r}")

    @property
    def dtype(self):
        return np.uint8 if self.element_kind == "u8" else np.float32

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.height, self.width, self.channels)


@dataclass(frozen=True)
class Discrete:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("discrete n must be >= 1")


Leaf = ScalarBox | VectorBox | Image | Discrete


def _leaf_to_dict(leaf: Leaf) -> dict:
    if isinstance(leaf, ScalarBox):
        return {"kind": "scalar", "low": leaf.low, "high": leaf.high,
                "unit": leaf.unit, "semantics": leaf.semantics}
    if isinstance(leaf, VectorBox):
        return {"kind": "vector", "dim": leaf.dim, "low": list(leaf.low),
                "high": list(leaf.high), "unit": leaf.unit, "semantics": leaf.semantics}
    if isinstance(leaf, Image):
        return {"kind": "image", "height": leaf.height, "width": leaf.width,
                "channels": leaf.channels, "element_kind": leaf.element_kind}
    return {"kind": "discrete", "n": leaf.n}


def leaf_from_dict(d: dict) -> Leaf:
    kind = d["kind"]
    if kind == "scalar":
        return ScalarBox(d["low"], d["high"], d.get("unit", ""), d.get("semantics", "absolute"))
    if kind == "vector":
        return VectorBox(d["dim"], tuple(d["low"]), tuple(d["high"]),
                         d.get("unit", ""), d.get("semantics", "absolute"))
    if kind == "image":
        return Image(d["height"], d["width"], d["channels"], d.get("element_kind", "u8"))
    if kind == "discrete":
        return Discrete(d["n"])
    raise ValueError(f"unknown leaf kind {kind!r}")


class SpaceDescriptor(Mapping[str, Leaf]):
    """Immutable named-channel space."""

    def __init__(self, entries: Mapping[str, Leaf]):
        self._entries = dict(entries)

    def __getitem__(self, name: str) -> Leaf:
        return self._entries[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, SpaceDescriptor) and self._entries == other._entries

    def __repr__(self) -> str:
        return f"SpaceDescriptor({sorted(self._entries)})"

    def with_channel(self, name: str, leaf: Leaf) -> "SpaceDescriptor":
        if name in self._entries:
            raise SpaceMismatch(name, "channel already present")
        out = dict(self._entries)
        out[name] = leaf
        return SpaceDescriptor(out)

    def without_channel(self, name: str) -> "SpaceDescriptor":
        if name not in self._entries:
            raise SpaceMismatch(name, "channel absent")
        out = dict(self._entries)
        del out[name]
        return SpaceDescriptor(out)

    def renamed(self, old: str, new: str) -> "SpaceDescriptor":
        if old not in self._entries:
            raise SpaceMismatch(old, "channel absent")
        out = {}
        for k, v in self._entries.items():
            out[new if k == old else k] = v
        return SpaceDescriptor(out)

    def to_dict(self) -> dict:
        return {name: _leaf_to_dict(leaf) for name, leaf in sorted(self._entries.items())}

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    @staticmethod
    def from_dict(d: Mapping[str, dict]) -> "SpaceDescriptor":
        return SpaceDescriptor({name: leaf_from_dict(spec) for name, spec in d.items()})

    # ---- value handling -------------------------------------------------

    def validate(self, channels: Mapping[str, Any], what: str = "value",
                 check_bounds: bool = True) -> None:
        """Raise SpaceMismatch on any channel not conforming to its leaf.
        With check_bounds=False only structure (names, shapes, dtypes,
        NaN-freedom) is enforced, for callers that clamp afterwards."""
        for name in channels:
            if name not in self._entries:
                raise SpaceMismatch(name, f"{what} has channel not in space")
        for name, leaf in self._entries.items():
            if name not in channels:
                raise SpaceMismatch(name, f"{what} missing channel")
            err = _conformance_error(leaf, channels[name], check_bounds)
            if err:
                raise SpaceMismatch(name, f"{what} {err}")

    def clamp(self, channels: Mapping[str, Any]) -> tuple[dict, bool]:
        """Clamp numeric channels into bounds. Returns (values, any_changed).
        Shapes and dtypes must already conform (validate first)."""
        out = {}
        changed = False
        for name, leaf in self._entries.items():
            value = channels[name]
            if isinstance(leaf, ScalarBox):
                v = float(value)
                c = min(max(v, leaf.low), leaf.high)
                changed |= c != v
                out[name] = c
            elif isinstance(leaf, VectorBox):
                arr = np.asarray(value, dtype=np.float64)
                clipped = np.clip(arr, leaf.low_array, leaf.high_array)
                changed |= bool(np.any(clipped != arr))
                out[name] = clipped
            elif isinstance(leaf, Discrete):
                v = int(value)
                c = min(max(v, 0), leaf.n - 1)
                changed |= c != v
                out[name] = c
            else:
                out[name] = value
        return out, changed

    def sample(self, rng: np.random.Generator) -> dict:
        """Uniform random conforming value, used by fuzz tests and the
        random baseline policy."""
        out = {}
        for name, leaf in self._entries.items():
            if isinstance(leaf, ScalarBox):
                out[name] = float(rng.uniform(leaf.low, leaf.high))
            elif isinstance(leaf, VectorBox):
                out[name] = rng.uniform(leaf.low_array, leaf.high_array)
            elif isinstance(leaf, Image):
                if leaf.element_kind == "u8":
                    out[name] = rng.integers(0, 256, size=leaf.shape, dtype=np.uint8)
                else:
                    out[name] = rng.random(size=leaf.shape, dtype=np.float32)
            else:
                out[name] = int(rng.integers(0, leaf.n))
        return out


def _conformance_error(leaf: Leaf, value: Any, check_bounds: bool = True) -> str | None:
    if isinstance(leaf, ScalarBox):
        if np.ndim(value) != 0:
            return "not a scalar"
        try:
            v = float(value)
        except (TypeError, ValueError):
            return "not a scalar"
        if np.isnan(v):
            return "is NaN"
        if check_bounds and not leaf.low <= v <= leaf.high:
            return f"out of bounds [{leaf.low}, {leaf.high}]: {v}"
        return None
    if isinstance(leaf, VectorBox):
        arr = np.asarray(value)
        if arr.shape != (leaf.dim,):
            return f"shape {arr.shape} != ({leaf.dim},)"
        if not np.issubdtype(arr.dtype, np.floating) and not np.issubdtype(arr.dtype, np.integer):
            return f"non-numeric dtype {arr.dtype}"
        if np.any(np.isnan(arr.astype(np.float64))):
            return "contains NaN"
        if check_bounds and (np.any(arr < leaf.low_array) or np.any(arr > leaf.high_array)):
            return "out of bounds"
        return None
    if isinstance(leaf, Image):
        arr = np.asarray(value)
        if arr.shape != leaf.shape:
            return f"shape {arr.shape} != {leaf.shape}"
        if arr.dtype != leaf.dtype:
            return f"dtype {arr.dtype} != {np.dtype(leaf.dtype)}"
        return None
    if isinstance(leaf, Discrete):
        if np.ndim(value) != 0:
            return "not a scalar"
        v = int(value)
        if v != value:
            return "not an integer"
        if check_bounds and not 0 <= v < leaf.n:
            return f"out of range [0, {leaf.n})"
        return None
    return f"unknown leaf {leaf!r}"


def first_mismatch(a: SpaceDescriptor, b: SpaceDescriptor) -> str | None:
    """Name of the first channel (sorted) on which a and b disagree."""
    for name in sorted(set(a) | set(b)):
        if a.get(name) != b.get(name):
            return name
    return None


def copy_channels(channels: Mapping[str, Any]) -> dict:
    """Per-channel deep copy; wrappers receive copies, never aliases."""
    out = {}
    for name, value in channels.items():
        out[name] = value.copy() if isinstance(value, np.ndarray) else value
    return out


def pose7_leaf(reach: float = 10.0) -> VectorBox:
    """Leaf for a pose channel stored as (qw, qx, qy, qz, x, y, z)."""
    return VectorBox(7, (-1, -1, -1, -1, -reach, -reach, -reach),
                     (1, 1, 1, 1, reach, reach, reach), unit="pose_wxyz_xyz")
