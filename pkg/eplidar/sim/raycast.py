"""Vectorised Möller–Trumbore ray casting with per-mesh bounding-box culling."""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .mesh import Material, TriangleMesh

_DET_EPS = 1e-12
_T_EPS = 1e-9
# rays x triangles evaluated per block
_BLOCK = 262144


@dataclass(frozen=True)
class RayHit:
    distance: float
    point: np.ndarray
    surface_normal: np.ndarray
    material: Material


@dataclass
class RayBatchHits:
    """Nearest hit per ray; ``mesh_index`` is -1 for rays that missed everything."""

    distance: np.ndarray  # (r,) inf on miss
    mesh_index: np.ndarray  # (r,) int64
    normal: np.ndarray  # (r, 3)

    @property
    def hit(self) -> np.ndarray:
        return self.mesh_index >= 0


def _aabb_candidates(bounds: np.ndarray, origins: np.ndarray, directions: np.ndarray, max_range: float) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / directions
        t0 = (bounds[0] - origins) * inv
        t1 = (bounds[1] - origins) * inv
    lo = np.where(np.isnan(t0), -np.inf, np.minimum(t0, t1))
    hi = np.where(np.isnan(t1), np.inf, np.maximum(t0, t1))
    # zero direction components: inside the slab or never
    par = directions == 0.0
    inside = (origins >= bounds[0]) & (origins <= bounds[1])
    lo = np.where(par, np.where(inside, -np.inf, np.inf), lo)
    hi = np.where(par, np.where(inside, np.inf, -np.inf), hi)
    t_near = lo.max(axis=1)
    t_far = hi.min(axis=1)
    return np.nonzero((t_far >= np.maximum(t_near, 0.0)) & (t_near <= max_range))[0]


def _intersect_mesh(mesh: TriangleMesh, origins: np.ndarray, directions: np.ndarray, max_range: float):
    """Nearest triangle hit for each ray against one mesh: (t, triangle index), inf/-1 on miss."""
    v0, v1, v2 = mesh.corners
    e1 = v1 - v0
    e2 = v2 - v0
    n_rays, n_tris = origins.shape[0], v0.shape[0]
    best_t = np.full((n_rays,), np.inf)
    best_tri = np.full((n_rays,), -1, dtype=np.int64)
    if n_tris == 0 or n_rays == 0:
        return best_t, best_tri
    step = max(1, _BLOCK // n_tris)
    for s in range(0, n_rays, step):
        o = origins[s:s + step, None, :]
        d = directions[s:s + step, None, :]
        pvec = np.cross(d, e2[None])
        det = np.einsum("tk,rtk->rt", e1, pvec)
        ok = np.abs(det) > _DET_EPS
        inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tvec = o - v0[None]
        u = np.einsum("rtk,rtk->rt", tvec, pvec) * inv_det
        ok &= (u >= 0.0) & (u <= 1.0)
        qvec = np.cross(tvec, e1[None])
        v = np.einsum("rk,rtk->rt", d[:, 0, :], qvec) * inv_det
        ok &= (v >= 0.0) & (u + v <= 1.0)
        t = np.einsum("tk,rtk->rt", e2, qvec) * inv_det
        ok &= (t > _T_EPS) & (t <= max_range)
        t = np.where(ok, t, np.inf)
        idx = np.argmin(t, axis=1)
        tmin = t[np.arange(t.shape[0]), idx]
        best_t[s:s + step] = tmin
        best_tri[s:s + step] = np.where(np.isfinite(tmin), idx, -1)
    return best_t, best_tri


def cast_rays(meshes: Sequence[TriangleMesh], origins, directions, max_range: float = np.inf) -> RayBatchHits:
    """Nearest positive-distance hit for every ray.

    Directions are normalised, so distances are metric. Earlier meshes win exact ties.
    """
    origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    directions = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    if origins.shape[0] == 1 and directions.shape[0] > 1:
        origins = np.broadcast_to(origins, directions.shape)
    norms = np.linalg.norm(directions, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("Ray directions must be non-zero")
    directions = directions / norms[:, None]

    n = directions.shape[0]
    distance = np.full((n,), np.inf)
    mesh_index = np.full((n,), -1, dtype=np.int64)
    normal = np.zeros((n, 3))
    for m, mesh in enumerate(meshes):
        cand = _aabb_candidates(mesh.bounds, origins, directions, max_range)
        if cand.size == 0:
            continue
        t, tri = _intersect_mesh(mesh, origins[cand], directions[cand], max_range)
        closer = t < distance[cand]
        if not np.any(closer):
            continue
        rays = cand[closer]
        distance[rays] = t[closer]
        mesh_index[rays] = m
        v0, v1, v2 = mesh.corners
        tri_hit = tri[closer]
        n_vec = np.cross(v1[tri_hit] - v0[tri_hit], v2[tri_hit] - v0[tri_hit])
        normal[rays] = n_vec / np.linalg.norm(n_vec, axis=1, keepdims=True)
    return RayBatchHits(distance=distance, mesh_index=mesh_index, normal=normal)


def cast_ray(meshes: Sequence[TriangleMesh], origin, direction, max_range: float = np.inf) -> Optional[RayHit]:
    direction = np.asarray(direction, dtype=np.float64).reshape(3)
    if not np.any(direction):
        raise ValueError("Ray direction must be non-zero")
    unit = direction / np.linalg.norm(direction)
    hits = cast_rays(meshes, np.asarray(origin, dtype=np.float64).reshape(1, 3), unit.reshape(1, 3), max_range)
    if not hits.hit[0]:
        return None
    dist = float(hits.distance[0])
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    return RayHit(
        distance=dist,
        point=origin + unit * dist,
        surface_normal=hits.normal[0].copy(),
        material=meshes[int(hits.mesh_index[0])].material,
    )
