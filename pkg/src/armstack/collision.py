"""Primitive collision queries for link capsules, scene boxes/spheres and
axis-aligned safety zones.

Depths are penetration depths in meters (positive = touching/overlapping).
Capsule-vs-box uses a bracketed ternary search on the box's signed
distance along the capsule axis; the SDF of a convex body is convex along
a line, so the minimum is unimodal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .se3 import Pose, rotation_matrix


@dataclass(frozen=True)
class Contact:
    pair: tuple[str, str]
    depth: float


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def segment_segment_distance(p1, q1, p2, q2) -> float:
    """Closest distance between segments [p1,q1] and [p2,q2]."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    if a == 0.0 and e == 0.0:
        return float(np.linalg.norm(r))
    if a == 0.0:
        t = np.clip(f / e, 0.0, 1.0)
        return float(np.linalg.norm(p1 - (p2 + t * d2)))
    c = float(d1 @ r)
    if e == 0.0:
        s = np.clip(-c / a, 0.0, 1.0)
        return float(np.linalg.norm(p1 + s * d1 - p2))
    b = float(d1 @ d2)
    denom = a * e - b * b
    s = np.clip((b * f - c * e) / denom, 0.0, 1.0) if denom != 0.0 else 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = np.clip(-c / a, 0.0, 1.0)
    elif t > 1.0:
        t = 1.0
        s = np.clip((b - c) / a, 0.0, 1.0)
    return float(np.linalg.norm(p1 + s * d1 - (p2 + t * d2)))


def box_sdf(p: np.ndarray, half: np.ndarray) -> float:
    """Signed distance of a point to an origin-centered axis-aligned box."""
    q = np.abs(p) - half
    outside = float(np.linalg.norm(np.maximum(q, 0.0)))
    inside = float(min(np.max(q), 0.0))
    return outside + inside


def box_sdf_many(points: np.ndarray, half: np.ndarray) -> np.ndarray:
    q = np.abs(points) - half
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
    inside = np.minimum(q.max(axis=-1), 0.0)
    return outside + inside


def point_box_outside_distance(p: np.ndarray, half: np.ndarray) -> float:
    """0 inside the box, Euclidean distance to the box otherwise."""
    q = np.abs(p) - half
    return float(np.linalg.norm(np.maximum(q, 0.0)))


def segment_box_min_sdf(a: np.ndarray, b: np.ndarray, box_pose: Pose, half: np.ndarray,
                        coarse: int = 17, refine_iters: int = 48) -> float:
    """Minimum of the box SDF along segment [a, b] (world frame)."""
    rot = rotation_matrix(box_pose.rotation)
    a_l = rot.T @ (a - box_pose.translation)
    b_l = rot.T @ (b - box_pose.translation)
    ts = np.linspace(0.0, 1.0, coarse)
    pts = a_l[None, :] + ts[:, None] * (b_l - a_l)[None, :]
    vals = box_sdf_many(pts, half)
    k = int(np.argmin(vals))
    lo = ts[max(0, k - 1)]
    hi = ts[min(coarse - 1, k + 1)]
    seg = b_l - a_l
    for _ in range(refine_iters):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if box_sdf(a_l + m1 * seg, half) <= box_sdf(a_l + m2 * seg, half):
            hi = m2
        else:
            lo = m1
    return box_sdf(a_l + 0.5 * (lo + hi) * seg, half)


def capsule_sphere_depth(a, b, radius, center, sphere_radius) -> float:
    return radius + sphere_radius - point_segment_distance(center, a, b)


def capsule_capsule_depth(a1, b1, r1, a2, b2, r2) -> float:
    return r1 + r2 - segment_segment_distance(a1, b1, a2, b2)


def capsule_box_depth(a, b, radius, box_pose: Pose, half) -> float:
    return radius - segment_box_min_sdf(a, b, box_pose, np.asarray(half, dtype=np.float64))


def capsule_outside_zone_depth(a, b, zone_center, zone_half) -> float:
    """How far the capsule axis pokes out of an axis-aligned zone box,
    measured at the segment endpoints (the capsule radius is ignored so
    that 'EE x m outside' reports exactly x)."""
    zone_center = np.asarray(zone_center, dtype=np.float64)
    zone_half = np.asarray(zone_half, dtype=np.float64)
    return max(
        point_box_outside_distance(a - zone_center, zone_half),
        point_box_outside_distance(b - zone_center, zone_half),
    )


def bounding_spheres_overlap(a1, b1, r1, a2, b2, r2, margin: float = 0.0) -> bool:
    """Cheap broad-phase cull for a capsule pair."""
    c1 = 0.5 * (a1 + b1)
    c2 = 0.5 * (a2 + b2)
    rad1 = 0.5 * float(np.linalg.norm(b1 - a1)) + r1
    rad2 = 0.5 * float(np.linalg.norm(b2 - a2)) + r2
    return float(np.linalg.norm(c2 - c1)) <= rad1 + rad2 + margin
