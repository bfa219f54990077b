"""Depth-only software rasterizer for virtual depth images.

Triangles are moved into the camera frame, clipped against the near plane,
projected to pixel coordinates and scan-converted with a z-buffer. Pixel
(row i, column j) samples the point ``u = j, v = i``; ties on shared edges
follow the top-left rule so every sample is claimed by at most one triangle
of a closed mesh. ``1/Z`` is interpolated linearly in screen space, which
makes the stored depth exactly the planar camera-frame Z.
"""

from __future__ import annotations

import numba
import numpy as np
from numba import njit, prange

from .camera import CameraModel
from .depth import DepthImage
from .kinematics import JointState, forward_kinematics, posed_meshes
from .urdf import RobotModel

# the TBB layer on some systems is too old and warns on probe
if not numba.config.THREADING_LAYER or numba.config.THREADING_LAYER == "default":
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

#: Rows per parallel band.
BAND_ROWS = 16


@njit(cache=True)
def _clip_near(tris, near):
    """Clip (T, 3, 3) camera-frame triangles to Z >= near; returns (K, 3, 3)."""
    n = tris.shape[0]
    out = np.empty((2 * n, 3, 3))
    k = 0
    poly = np.empty((4, 3))
    for t in range(n):
        z0, z1, z2 = tris[t, 0, 2], tris[t, 1, 2], tris[t, 2, 2]
        if z0 >= near and z1 >= near and z2 >= near:
            out[k] = tris[t]
            k += 1
            continue
        if z0 < near and z1 < near and z2 < near:
            continue
        m = 0
        for e in range(3):
            a = tris[t, e]
            b = tris[t, (e + 1) % 3]
            a_in = a[2] >= near
            b_in = b[2] >= near
            if a_in:
                poly[m] = a
                m += 1
            if a_in != b_in:
                s = (near - a[2]) / (b[2] - a[2])
                for c in range(2):
                    poly[m, c] = a[c] + s * (b[c] - a[c])
                poly[m, 2] = near
                m += 1
        for j in range(1, m - 1):
            out[k, 0] = poly[0]
            out[k, 1] = poly[j]
            out[k, 2] = poly[j + 1]
            k += 1
    return out[:k]


@njit(cache=True)
def _setup(tris, fx, fy, cx, cy, far, width, height):
    """Screen-space setup: per triangle x, y, 1/Z, edge data and bounding box.

    Edge ``e`` runs from vertex ``e`` to ``e + 1`` and is stored with its
    endpoints in lexicographic order plus a sign, so a shared edge evaluates
    to exactly opposite values in its two triangles.
    """
    n = tris.shape[0]
    sx = np.empty((n, 3))
    sy = np.empty((n, 3))
    iz = np.empty((n, 3))
    edges = np.empty((n, 3, 5))  # ax, ay, bx, by, sign
    topleft = np.zeros((n, 3), dtype=np.bool_)
    area = np.empty(n)
    bbox = np.empty((n, 4), dtype=np.int64)  # j0, j1, i0, i1 inclusive
    keep = np.zeros(n, dtype=np.bool_)
    for t in range(n):
        if tris[t, 0, 2] > far and tris[t, 1, 2] > far and tris[t, 2, 2] > far:
            continue
        for c in range(3):
            z = tris[t, c, 2]
            sx[t, c] = fx * tris[t, c, 0] / z + cx
            sy[t, c] = fy * tris[t, c, 1] / z + cy
            iz[t, c] = 1.0 / z
        a = (sx[t, 1] - sx[t, 0]) * (sy[t, 2] - sy[t, 0]) - (sy[t, 1] - sy[t, 0]) * (sx[t, 2] - sx[t, 0])
        if a == 0.0 or not np.isfinite(a):
            continue
        if a < 0.0:
            for arr in (sx, sy, iz):
                tmp = arr[t, 1]
                arr[t, 1] = arr[t, 2]
                arr[t, 2] = tmp
            a = -a
        area[t] = a
        for e in range(3):
            x0, y0 = sx[t, e], sy[t, e]
            x1, y1 = sx[t, (e + 1) % 3], sy[t, (e + 1) % 3]
            dx, dy = x1 - x0, y1 - y0
            topleft[t, e] = (dy == 0.0 and dx > 0.0) or dy < 0.0
            if x0 < x1 or (x0 == x1 and y0 <= y1):
                edges[t, e, 0], edges[t, e, 1], edges[t, e, 2], edges[t, e, 3] = x0, y0, x1, y1
                edges[t, e, 4] = 1.0
            else:
                edges[t, e, 0], edges[t, e, 1], edges[t, e, 2], edges[t, e, 3] = x1, y1, x0, y0
                edges[t, e, 4] = -1.0
        j0 = max(int(np.ceil(min(sx[t, 0], sx[t, 1], sx[t, 2]))), 0)
        j1 = min(int(np.floor(max(sx[t, 0], sx[t, 1], sx[t, 2]))), width - 1)
        i0 = max(int(np.ceil(min(sy[t, 0], sy[t, 1], sy[t, 2]))), 0)
        i1 = min(int(np.floor(max(sy[t, 0], sy[t, 1], sy[t, 2]))), height - 1)
        if j0 > j1 or i0 > i1:
            continue
        bbox[t, 0], bbox[t, 1], bbox[t, 2], bbox[t, 3] = j0, j1, i0, i1
        keep[t] = True
    return sx, sy, iz, edges, topleft, area, bbox, keep


@njit(cache=True, inline="always")
def _edge(edges, t, e, px, py):
    ax, ay, bx, by = edges[t, e, 0], edges[t, e, 1], edges[t, e, 2], edges[t, e, 3]
    return edges[t, e, 4] * ((bx - ax) * (py - ay) - (by - ay) * (px - ax))


@njit(cache=True, parallel=True)
def _raster(iz, edges, topleft, area, bbox, idx, near, far, width, height, band):
    depth = np.full((height, width), np.inf)
    nbands = (height + band - 1) // band
    for b in prange(nbands):
        r0 = b * band
        r1 = min(r0 + band, height) - 1
        for k in range(idx.shape[0]):
            t = idx[k]
            i0 = max(bbox[t, 2], r0)
            i1 = min(bbox[t, 3], r1)
            if i0 > i1:
                continue
            inv_area = 1.0 / area[t]
            for i in range(i0, i1 + 1):
                py = float(i)
                for j in range(bbox[t, 0], bbox[t, 1] + 1):
                    px = float(j)
                    # e1 is the edge opposite vertex 0, and so on
                    e0 = _edge(edges, t, 1, px, py)
                    if e0 < 0.0 or (e0 == 0.0 and not topleft[t, 1]):
                        continue
                    e1 = _edge(edges, t, 2, px, py)
                    if e1 < 0.0 or (e1 == 0.0 and not topleft[t, 2]):
                        continue
                    e2 = _edge(edges, t, 0, px, py)
                    if e2 < 0.0 or (e2 == 0.0 and not topleft[t, 0]):
                        continue
                    w = (e0 * iz[t, 0] + e1 * iz[t, 1] + e2 * iz[t, 2]) * inv_area
                    if w <= 0.0:
                        continue
                    z = 1.0 / w
                    if z > far:
                        continue
                    if z < near:
                        z = near  # clipped geometry is at Z >= near; this is rounding only
                    if z < depth[i, j]:
                        depth[i, j] = z
    for i in prange(height):
        for j in range(width):
            if depth[i, j] == np.inf:
                depth[i, j] = 0.0
    return depth


def camera_frame_corners(meshes, cam: CameraModel) -> np.ndarray:
    """Stack all triangles as (T, 3, 3) camera-frame corners."""
    parts = []
    for mesh, tf in meshes:
        if mesh.n_triangles == 0:
            continue
        pts = (cam.world_to_camera @ tf).apply(mesh.vertices)
        parts.append(pts[mesh.triangles])
    if not parts:
        return np.zeros((0, 3, 3))
    return np.ascontiguousarray(np.concatenate(parts))


def rasterize_corners(tris: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Z-buffer depth for camera-frame triangles; returns a (H, W) array, 0 = empty."""
    tris = np.ascontiguousarray(tris, dtype=np.float64).reshape(-1, 3, 3)
    clipped = _clip_near(tris, cam.near)
    sx, sy, iz, edges, topleft, area, bbox, keep = _setup(
        clipped, cam.fx, cam.fy, cam.cx, cam.cy, cam.far, cam.width, cam.height
    )
    idx = np.flatnonzero(keep)
    return _raster(iz, edges, topleft, area, bbox, idx, cam.near, cam.far, cam.width, cam.height, BAND_ROWS)


def render_vdi(meshes, cam: CameraModel) -> DepthImage:
    """Render posed world-frame meshes into a depth image from ``cam``.

    Each pixel holds the nearest camera-frame Z within ``[near, far]``;
    uncovered pixels are 0.0. Degenerate triangles are skipped.
    """
    return DepthImage(rasterize_corners(camera_frame_corners(meshes, cam), cam))


def render_frame(model: RobotModel, q: JointState, cam: CameraModel) -> DepthImage:
    """Forward kinematics, then :func:`render_vdi` of the collision model."""
    return render_vdi(posed_meshes(model, forward_kinematics(model, q)), cam)


def warmup() -> None:
    """Trigger JIT compilation (or cache load) of the raster kernels."""
    cam = CameraModel(8, 8, 8.0, 8.0, 4.0, 4.0, 0.5, 3.0)
    tri = np.array([[[-1.0, -1.0, 1.0], [1.0, -1.0, 1.0], [0.0, 1.0, 0.2]]])
    rasterize_corners(tri, cam)


def num_threads() -> int:
    return numba.get_num_threads()
