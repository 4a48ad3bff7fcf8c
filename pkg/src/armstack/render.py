"""Software z-buffer rasterizer with a pinhole camera model.

Scene primitives are triangulated (boxes as 12 triangles, spheres as
icospheres, link capsules as capped tubes) and shaded with flat per-face
Lambert lighting from one fixed directional light. Depth output is the
camera-frame z of the hit surface in meters, +inf where nothing was hit;
1/z is interpolated across each triangle, so per-pixel depth is exact for
planar faces. Pixel output is deterministic.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .se3 import Pose, pose_inverse, rotation_matrix

NEAR_PLANE = 0.01
BACKGROUND_RGB = (0.12, 0.13, 0.15)
LIGHT_DIR = np.array([0.35, -0.25, -0.9])
LIGHT_DIR = LIGHT_DIR / np.linalg.norm(LIGHT_DIR)
AMBIENT = 0.35
ARM_COLOR = (0.55, 0.57, 0.62)
GROUND_EXTENT = 2.5


def box_mesh(half: np.ndarray) -> np.ndarray:
    """(12, 3, 3) triangle vertices of an origin-centered box."""
    hx, hy, hz = half
    v = np.array([
        [-hx, -hy, -hz], [hx, -hy, -hz], [hx, hy, -hz], [-hx, hy, -hz],
        [-hx, -hy, hz], [hx, -hy, hz], [hx, hy, hz], [-hx, hy, hz],
    ])
    faces = [
        (0, 2, 1), (0, 3, 2),  # bottom
        (4, 5, 6), (4, 6, 7),  # top
        (0, 1, 5), (0, 5, 4),  # -y
        (2, 3, 7), (2, 7, 6),  # +y
        (1, 2, 6), (1, 6, 5),  # +x
        (3, 0, 4), (3, 4, 7),  # -x
    ]
    return v[np.array(faces)]


@lru_cache(maxsize=32)
def _unit_icosphere(subdivisions: int = 1) -> tuple:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    verts = [np.array(v) / np.linalg.norm(v) for v in verts]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    for _ in range(subdivisions):
        new_faces = []
        cache: dict = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.array(verts), np.array(faces)


def sphere_mesh(radius: float, subdivisions: int = 1) -> np.ndarray:
    verts, faces = _unit_icosphere(subdivisions)
    return (verts * radius)[faces]


@lru_cache(maxsize=256)
def _capsule_mesh_cached(length_mm: int, radius_mm: int, segments: int = 8) -> np.ndarray:
    """Capped tube along +z from 0 to length; cached on mm-rounded dims."""
    length = length_mm / 1000.0
    radius = radius_mm / 1000.0
    ang = np.linspace(0.0, 2 * np.pi, segments, endpoint=False)
    ring = np.stack([np.cos(ang) * radius, np.sin(ang) * radius], axis=1)
    bottom = np.concatenate([ring, np.zeros((segments, 1))], axis=1)
    top = np.concatenate([ring, np.full((segments, 1), length)], axis=1)
    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        tris.append((bottom[i], bottom[j], top[j]))
        tris.append((bottom[i], top[j], top[i]))
    # hemispherical caps, one fan ring each
    cap_b = np.array([0.0, 0.0, -radius])
    cap_t = np.array([0.0, 0.0, length + radius])
    for i in range(segments):
        j = (i + 1) % segments
        tris.append((bottom[j], bottom[i], cap_b))
        tris.append((top[i], top[j], cap_t))
    return np.array(tris)


def capsule_mesh(a: np.ndarray, b: np.ndarray, radius: float) -> np.ndarray:
    """Triangles of a capsule between world points a and b."""
    d = b - a
    length = float(np.linalg.norm(d))
    tris = _capsule_mesh_cached(max(1, round(length * 1000)), max(1, round(radius * 1000))).copy()
    if length > 1e-9:
        z = d / length
    else:
        z = np.array([0.0, 0.0, 1.0])
    helper = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    x = np.cross(helper, z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    rot = np.stack([x, y, z], axis=1)
    return tris @ rot.T + a


def look_at_pose(eye, target, up=(0.0, 0.0, 1.0)) -> Pose:
    """Camera extrinsic pose (base_T_cam) with +z toward the target and
    image-up roughly aligned with ``up`` (+y points down in the image)."""
    eye = np.asarray(eye, dtype=np.float64)
    z = np.asarray(target, dtype=np.float64) - eye
    z = z / np.linalg.norm(z)
    y_hint = -np.asarray(up, dtype=np.float64)
    x = np.cross(y_hint, z)
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    rot = np.stack([x, y, z], axis=1)
    # rotation matrix -> quaternion (w, x, y, z)
    w = np.sqrt(max(0.0, 1.0 + rot[0, 0] + rot[1, 1] + rot[2, 2])) / 2.0
    if w > 1e-8:
        q = np.array([
            w,
            (rot[2, 1] - rot[1, 2]) / (4 * w),
            (rot[0, 2] - rot[2, 0]) / (4 * w),
            (rot[1, 0] - rot[0, 1]) / (4 * w),
        ])
    else:  # w ~ 0: pick the dominant diagonal term
        i = int(np.argmax(np.diag(rot)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(1e-12, 1.0 + rot[i, i] - rot[j, j] - rot[k, k])) * 2.0
        q = np.zeros(4)
        q[0] = (rot[k, j] - rot[j, k]) / s
        q[1 + i] = s / 4.0
        q[1 + j] = (rot[j, i] + rot[i, j]) / s
        q[1 + k] = (rot[k, i] + rot[i, k]) / s
    return Pose(q, eye)


def _gather_triangles(state, scene) -> tuple[np.ndarray, np.ndarray]:
    """World-space (n, 3, 3) triangles and (n, 3) float colors."""
    from .sim.dynamics import world_capsules

    tri_groups = []
    color_groups = []

    def add(tris: np.ndarray, color) -> None:
        if len(tris):
            tri_groups.append(tris)
            color_groups.append(np.tile(np.asarray(color, dtype=np.float64), (len(tris), 1)))

    if scene.ground_color is not None:
        g = GROUND_EXTENT
        quad = np.array([
            [[-g, -g, 0.0], [g, -g, 0.0], [g, g, 0.0]],
            [[-g, -g, 0.0], [g, g, 0.0], [-g, g, 0.0]],
        ])
        add(quad, scene.ground_color)

    for obj, pose in zip(scene.objects, state.object_poses):
        if obj.shape == "box":
            tris = box_mesh(obj.half_extents)
        else:
            tris = sphere_mesh(obj.radius)
        rot = rotation_matrix(pose.rotation)
        add(tris @ rot.T + pose.translation, obj.color)

    for _, _, a, b, radius in world_capsules(state, scene):
        if radius <= 0.0:
            continue
        add(capsule_mesh(a, b, radius), ARM_COLOR)

    if not tri_groups:
        return np.zeros((0, 3, 3)), np.zeros((0, 3))
    return np.concatenate(tri_groups), np.concatenate(color_groups)


def _clip_near(tri_cam: np.ndarray) -> list[np.ndarray]:
    """Sutherland-Hodgman clip of one camera-space triangle against
    z = NEAR_PLANE; returns 0..2 triangles."""
    inside = tri_cam[:, 2] > NEAR_PLANE
    n_in = int(inside.sum())
    if n_in == 3:
        return [tri_cam]
    if n_in == 0:
        return []
    poly = []
    for i in range(3):
        j = (i + 1) % 3
        p, q = tri_cam[i], tri_cam[j]
        if inside[i]:
            poly.append(p)
        if inside[i] != inside[j]:
            t = (NEAR_PLANE - p[2]) / (q[2] - p[2])
            poly.append(p + t * (q - p))
    out = []
    for k in range(1, len(poly) - 1):
        out.append(np.stack([poly[0], poly[k], poly[k + 1]]))
    return out


def render(camera, triangles: np.ndarray, colors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rasterize world-space triangles through a CameraSpec-like object
    (fx, fy, cx, cy, height, width, pose). Returns (rgb u8 HxWx3,
    depth f32 HxW with +inf background)."""
    h, w = camera.height, camera.width
    zbuf = np.full((h, w), np.inf, dtype=np.float64)
    img = np.empty((h, w, 3), dtype=np.float64)
    img[:] = BACKGROUND_RGB

    if len(triangles):
        world_t_cam = camera.pose
        cam_rot = rotation_matrix(world_t_cam.rotation).T
        cam_off = -cam_rot @ world_t_cam.translation

        # flat shading from world-space face normals
        e1 = triangles[:, 1] - triangles[:, 0]
        e2 = triangles[:, 2] - triangles[:, 0]
        normals = np.cross(e1, e2)
        norms = np.linalg.norm(normals, axis=1)
        norms[norms == 0.0] = 1.0
        normals /= norms[:, None]
        shade = AMBIENT + (1.0 - AMBIENT) * np.abs(normals @ LIGHT_DIR)
        lit = np.clip(colors * shade[:, None], 0.0, 1.0)

        cam_tris = triangles @ cam_rot.T + cam_off
        # cheap whole-triangle reject when fully behind the near plane
        keep = np.where((cam_tris[:, :, 2] > NEAR_PLANE).any(axis=1))[0]
        for idx in keep:
            for tri in _clip_near(cam_tris[idx]):
                _raster_triangle(tri, lit[idx], camera, zbuf, img)

    rgb = (img * 255.0 + 0.5).astype(np.uint8)
    return rgb, zbuf.astype(np.float32)


def _raster_triangle(tri_cam: np.ndarray, color: np.ndarray, camera, zbuf, img) -> None:
    z = tri_cam[:, 2]
    u = camera.fx * tri_cam[:, 0] / z + camera.cx
    v = camera.fy * tri_cam[:, 1] / z + camera.cy
    h, w = zbuf.shape
    x_min = max(0, int(np.floor(u.min() - 0.5)))
    x_max = min(w - 1, int(np.ceil(u.max() - 0.5)))
    y_min = max(0, int(np.floor(v.min() - 0.5)))
    y_max = min(h - 1, int(np.ceil(v.max() - 0.5)))
    if x_min > x_max or y_min > y_max:
        return

    area = (u[1] - u[0]) * (v[2] - v[0]) - (v[1] - v[0]) * (u[2] - u[0])
    if area == 0.0:
        return

    xs = np.arange(x_min, x_max + 1) + 0.5
    ys = np.arange(y_min, y_max + 1) + 0.5
    px, py = np.meshgrid(xs, ys)

    def edge(ax, ay, bx, by):
        return (bx - ax) * (py - ay) - (by - ay) * (px - ax)

    w0 = edge(u[1], v[1], u[2], v[2])
    w1 = edge(u[2], v[2], u[0], v[0])
    w2 = edge(u[0], v[0], u[1], v[1])
    if area > 0:
        mask = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
    else:
        mask = (w0 <= 0) & (w1 <= 0) & (w2 <= 0)
    if not mask.any():
        return

    b0 = w0 / area
    b1 = w1 / area
    b2 = w2 / area
    inv_z = b0 / z[0] + b1 / z[1] + b2 / z[2]  # exact for planar faces
    with np.errstate(divide="ignore"):
        depth = 1.0 / inv_z
    depth[~mask] = np.inf

    window_z = zbuf[y_min:y_max + 1, x_min:x_max + 1]
    closer = depth < window_z
    if not closer.any():
        return
    window_z[closer] = depth[closer]
    img[y_min:y_max + 1, x_min:x_max + 1][closer] = color


def render_scene_camera(camera, state, scene) -> tuple[np.ndarray, np.ndarray]:
    """Render one camera view of a SimState; see ``render``."""
    tris, colors = _gather_triangles(state, scene)
    return render(camera, tris, colors)


def save_png(path, rgb: np.ndarray) -> None:
    """Minimal PNG export (8-bit RGB) for debugging rendered frames."""
    import struct
    import zlib

    h, w, _ = rgb.shape
    raw = b"".join(b"\x00" + rgb[i].tobytes() for i in range(h))

    def chunk(tag: bytes, data: bytes) -> bytes:
        return (struct.pack(">I", len(data)) + tag + data
                + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF))

    header = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    payload = (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", header)
               + chunk(b"IDAT", zlib.compress(raw, 6)) + chunk(b"IEND", b""))
    with open(path, "wb") as fh:
        fh.write(payload)
