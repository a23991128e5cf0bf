import math
from typing import Sequence, Union

import numpy as np
from shapely.geometry import Polygon

from .types import OrientedBox, Point

HALF_PI = math.pi / 2.0
_CONTAIN_TOL = 1e-9

# corner sign pattern along local x, y, z
_CORNER_SIGNS = np.array(
    [
        [1, 1, -1], [-1, 1, -1], [-1, -1, -1], [1, -1, -1],
        [1, 1, 1], [-1, 1, 1], [-1, -1, 1], [1, -1, 1],
    ],
    dtype=np.float64,
)


def _to_box_frame(box: OrientedBox, xyz: np.ndarray) -> np.ndarray:
    c, s = math.cos(box.heading), math.sin(box.heading)
    d = xyz - box.center
    local = np.empty_like(d)
    local[:, 0] = c * d[:, 0] + s * d[:, 1]
    local[:, 1] = -s * d[:, 0] + c * d[:, 1]
    local[:, 2] = d[:, 2]
    return local


def box_contains_many(box: OrientedBox, xyz) -> np.ndarray:
    """Boolean mask of the points (n, 3+) that lie inside the box, boundary included."""
    pts = np.asarray(xyz, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    pts = pts[:, :3]
    if pts.shape[0] == 0:
        return np.zeros((0,), dtype=bool)
    half = box.extents / 2.0 + _CONTAIN_TOL
    local = _to_box_frame(box, pts)
    return np.all(np.abs(local) <= half, axis=1)


def box_contains(box: OrientedBox, p: Union[Point, Sequence[float]]) -> bool:
    xyz = p.xyz if isinstance(p, Point) else np.asarray(p, dtype=np.float64)[:3]
    return bool(box_contains_many(box, xyz.reshape(1, 3))[0])


def box_corners(box: OrientedBox) -> np.ndarray:
    """(8, 3) world-space corners; first four on the bottom face, counter-clockwise."""
    local = _CORNER_SIGNS * (box.extents / 2.0)
    c, s = math.cos(box.heading), math.sin(box.heading)
    world = np.empty_like(local)
    world[:, 0] = c * local[:, 0] - s * local[:, 1] + box.cx
    world[:, 1] = s * local[:, 0] + c * local[:, 1] + box.cy
    world[:, 2] = local[:, 2] + box.cz
    return world


def bev_polygon(box: OrientedBox) -> Polygon:
    return Polygon(box_corners(box)[:4, :2].tolist())


def inflate(box: OrientedBox, factor: float) -> OrientedBox:
    return box.with_changes(w=box.w * factor, h=box.h * factor, l=box.l * factor)


def canonical_heading(box: OrientedBox) -> OrientedBox:
    """Same physical box with its heading folded into [0, π/2).

    A half turn leaves a box unchanged; a quarter turn swaps its w and h extents.
    """
    theta = math.fmod(box.heading, math.pi)
    w, h = box.w, box.h
    if theta >= HALF_PI:
        theta -= HALF_PI
        w, h = h, w
    if theta >= HALF_PI:
        theta = 0.0
    return box.with_changes(heading=theta, w=w, h=h)


def _ordered(a: OrientedBox, b: OrientedBox):
    # evaluate in a fixed operand order so iou(a, b) == iou(b, a) bitwise
    return (a, b) if a.as_tuple() <= b.as_tuple() else (b, a)


def bev_intersection_area(a: OrientedBox, b: OrientedBox) -> float:
    first, second = _ordered(a, b)
    # bounding-circle rejection keeps disjoint pairs at exactly zero
    ra = 0.5 * math.hypot(first.w, first.h)
    rb = 0.5 * math.hypot(second.w, second.h)
    if math.hypot(first.cx - second.cx, first.cy - second.cy) > ra + rb:
        return 0.0
    return float(bev_polygon(first).intersection(bev_polygon(second)).area)


def bev_iou(a: OrientedBox, b: OrientedBox) -> float:
    inter = bev_intersection_area(a, b)
    if inter <= 0.0:
        return 0.0
    union = a.w * a.h + b.w * b.h - inter
    return float(min(1.0, max(0.0, inter / union)))


def iou_3d(a: OrientedBox, b: OrientedBox) -> float:
    """Bird's-eye-view polygon overlap times vertical overlap, over the union volume."""
    first, second = _ordered(a, b)
    z_overlap = max(0.0, min(first.top, second.top) - max(first.bottom, second.bottom))
    if z_overlap <= 0.0:
        return 0.0
    area = bev_intersection_area(first, second)
    if area <= 0.0:
        return 0.0
    inter = area * z_overlap
    union = first.volume + second.volume - inter
    return float(min(1.0, max(0.0, inter / union)))
