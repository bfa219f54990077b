"""Exhaustive ray-casting depth oracle.

Every sampled pixel ray is intersected with every triangle (Möller-Trumbore,
with a 1e-12 guard on the determinant for rays parallel to the triangle
plane). Slow by design; meant for small images and cross-checks of the
rasterizer.
"""

from __future__ import annotations

import numpy as np

from ..camera import CameraModel, pixel_rays
from ..depth import DepthImage

PARALLEL_EPS = 1e-12
_CHUNK_ELEMS = 2_000_000


def raycast_corners(tris: np.ndarray, rays: np.ndarray, near: float, far: float) -> np.ndarray:
    """Nearest hit depth within ``[near, far]`` for camera-origin rays with unit Z.

    ``tris`` is (T, 3, 3) in the camera frame, ``rays`` is (N, 3). Since each
    ray has Z component 1, the ray parameter equals camera-frame Z.
    Returns (N,) with 0.0 for rays that hit nothing in range.

    With the ray origin at the camera center, every Möller-Trumbore term is a
    scalar triple product that is linear in the ray direction ``d``::

        det = d . (e2 x e1)     u*det = d . (e2 x s)     v*det = d . (s x e1)

    where ``s = -v0``, so all rays are handled by three matrix products.
    """
    rays = np.asarray(rays, dtype=np.float64).reshape(-1, 3)
    best = np.full(len(rays), np.inf)
    if len(tris) == 0 or len(rays) == 0:
        return np.zeros(len(rays))
    s_vec = -tris[:, 0]
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    w_det = np.cross(e2, e1)
    w_u = np.cross(e2, s_vec)
    q = np.cross(s_vec, e1)
    t_num = np.einsum("ck,ck->c", e2, q)
    dx, dy, dz = rays[:, 0:1], rays[:, 1:2], rays[:, 2:3]

    def dot(w):
        # fixed evaluation order so results do not depend on how rays are batched
        return dx * w[:, 0] + dy * w[:, 1] + dz * w[:, 2]

    step = max(1, _CHUNK_ELEMS // len(rays))
    for c in range(0, len(tris), step):
        sl = slice(c, c + step)
        det = dot(w_det[sl])
        ok = np.abs(det) > PARALLEL_EPS
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        u = dot(w_u[sl]) * inv
        v = dot(q[sl]) * inv
        t = t_num[sl][None, :] * inv
        hit = ok & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t >= near) & (t <= far)
        np.minimum(best, np.where(hit, t, np.inf).min(axis=1), out=best)
    best[~np.isfinite(best)] = 0.0
    return best


def _camera_corners(meshes, cam: CameraModel) -> np.ndarray:
    # homogeneous 4x4 products, kept separate from the rasterizer's transform path
    view = cam.world_to_camera.as_matrix()
    parts = []
    for mesh, tf in meshes:
        m = view @ tf.as_matrix()
        pts = mesh.vertices @ m[:3, :3].T + m[:3, 3]
        parts.append(pts[mesh.triangles])
    return np.concatenate(parts) if parts else np.zeros((0, 3, 3))


def raycast_depth(meshes, cam: CameraModel, stride: int = 1) -> DepthImage:
    """Oracle depth image; only pixels whose row and column are multiples of ``stride`` are cast."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    us = np.arange(0, cam.width, stride, dtype=np.float64)
    vs = np.arange(0, cam.height, stride, dtype=np.float64)
    rays = pixel_rays(cam, us, vs).reshape(-1, 3)
    tris = _camera_corners(meshes, cam)
    hits = raycast_corners(tris, rays, cam.near, cam.far).reshape(len(vs), len(us))
    out = np.zeros(cam.shape)
    out[::stride, ::stride] = hits
    return DepthImage(out)
