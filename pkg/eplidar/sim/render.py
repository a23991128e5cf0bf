import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from eplidar.errors import TimeOutOfRange
from eplidar.geom import OrientedBox, PointCloud
from eplidar.utils import make_rng

from .gait import actor_frame, pose_actor, tight_box
from .raycast import cast_rays
from .scenario import Scenario
from .sensor import SensorConfig, intensity_many, ray_grid

logger = logging.getLogger(__name__)

NOISE_CLIP_SIGMAS = 3.0


@dataclass(frozen=True)
class RenderedFrame:
    frame_index: int
    time: float
    cloud: PointCloud
    boxes: Tuple[OrientedBox, ...]
    box_actor_ids: Tuple[int, ...]
    hit_actor: np.ndarray  # (n,) actor id per point, -1 for static geometry
    ray_index: np.ndarray  # (n,)


@lru_cache(maxsize=8)
def _cached_rays(sensor: SensorConfig):
    origin, dirs = ray_grid(sensor)
    origin.setflags(write=False)
    dirs.setflags(write=False)
    return origin, dirs


def render_frame_detailed(scenario: Scenario, frame_index: int) -> RenderedFrame:
    """Ray-cast one frame, keeping per-point actor ids and ray indices.

    Range noise is a Gaussian of ``sensor.range_noise_sigma`` truncated at
    ``NOISE_CLIP_SIGMAS`` sigmas, so no return moves more than 3 sigma along its ray.
    """
    n_frames = scenario.frame_count
    if not 0 <= frame_index < n_frames:
        raise TimeOutOfRange(f"frame_index {frame_index} outside [0, {n_frames}) for {scenario.scenario_id}")
    sensor = scenario.sensor
    t = frame_index / sensor.frame_rate

    meshes = list(scenario.static_meshes)
    owners = [-1] * len(meshes)
    boxes: List[OrientedBox] = []
    box_ids: List[int] = []
    for actor in scenario.actors:
        posed = pose_actor(actor, t, scenario.duration)
        meshes.extend(posed)
        owners.extend([actor.actor_id] * len(posed))
        px, py, _ = actor.trajectory.state_at(t)
        if scenario.in_bounds(px, py):
            x, y, heading = actor_frame(actor, t)
            boxes.append(tight_box(posed, x, y, heading, actor))
            box_ids.append(actor.actor_id)

    origin, dirs = _cached_rays(sensor)
    hits = cast_rays(meshes, origin.reshape(1, 3), dirs, sensor.max_range)
    rays = np.nonzero(hits.hit)[0]

    sigma = sensor.range_noise_sigma
    noise = make_rng(scenario.seed, frame_index).standard_normal(dirs.shape[0]) * sigma
    noise = np.clip(noise, -NOISE_CLIP_SIGMAS * sigma, NOISE_CLIP_SIGMAS * sigma)

    dist = hits.distance[rays]
    rng_ = np.maximum(dist + noise[rays], 0.0)
    d = dirs[rays]
    xyz = origin + d * rng_[:, None]
    cos_inc = np.abs(np.einsum("ij,ij->i", d, hits.normal[rays]))
    mesh_idx = hits.mesh_index[rays]
    refl = np.array([m.material.reflectivity for m in meshes])[mesh_idx]
    inten = intensity_many(refl, cos_inc, dist, sensor.distance_falloff, sensor.falloff_reference)

    # quantise to the on-disk precision so stored frames read back identically
    data = np.hstack([xyz, inten[:, None]]).astype(np.float32).astype(np.float64)
    data[:, 3] = np.clip(data[:, 3], 0.0, 1.0)
    return RenderedFrame(
        frame_index=frame_index,
        time=t,
        cloud=PointCloud(data),
        boxes=tuple(boxes),
        box_actor_ids=tuple(box_ids),
        hit_actor=np.asarray(owners, dtype=np.int64)[mesh_idx],
        ray_index=rays,
    )


def render_frame(scenario: Scenario, frame_index: int) -> Tuple[PointCloud, List[OrientedBox]]:
    frame = render_frame_detailed(scenario, frame_index)
    return frame.cloud, list(frame.boxes)


def render_scenario(scenario: Scenario, threads: int = 1,
                    frames: Optional[Sequence[int]] = None) -> Iterator[RenderedFrame]:
    """Render frames in index order; ``threads`` only changes wall time, never output."""
    indices = list(range(scenario.frame_count)) if frames is None else list(frames)
    if threads <= 1:
        for i in indices:
            yield render_frame_detailed(scenario, i)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(lambda i: render_frame_detailed(scenario, i), indices)
