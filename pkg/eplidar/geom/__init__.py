from .types import (
    CATEGORY_EXTENTS,
    Category,
    OrientedBox,
    Point,
    PointCloud,
    VoxelFeature,
    VoxelGrid,
    wrap_angle,
)
from .boxes import (
    bev_iou,
    bev_polygon,
    box_contains,
    box_contains_many,
    box_corners,
    canonical_heading,
    inflate,
    iou_3d,
)
from .sampling import farthest_point_sampling
from .voxel import voxelize
from .transform import invert_rigid, rotation_z, to_box_frame, transform_cloud

__all__ = [
    "CATEGORY_EXTENTS",
    "Category",
    "OrientedBox",
    "Point",
    "PointCloud",
    "VoxelFeature",
    "VoxelGrid",
    "wrap_angle",
    "bev_iou",
    "bev_polygon",
    "box_contains",
    "box_contains_many",
    "box_corners",
    "canonical_heading",
    "inflate",
    "iou_3d",
    "farthest_point_sampling",
    "voxelize",
    "invert_rigid",
    "rotation_z",
    "to_box_frame",
    "transform_cloud",
]
