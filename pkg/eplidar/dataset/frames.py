"""Binary point-cloud frames ("EPLF").

Layout, little-endian:
    magic       4 bytes  b"EPLF"
    version     u32      1
    point_count u64
    field_count u32      4 (x, y, z, intensity)
    payload     point_count * field_count * f32
"""

import logging
import os
import struct
from pathlib import Path
from typing import Union

import numpy as np

from eplidar.errors import MagicMismatch, TruncatedFrame, VersionMismatch
from eplidar.geom import PointCloud

logger = logging.getLogger(__name__)

FRAME_MAGIC = b"EPLF"
FRAME_VERSION = 1
FIELD_COUNT = 4
_HEADER = struct.Struct("<4sIQI")
HEADER_SIZE = _HEADER.size  # 20

PathLike = Union[str, os.PathLike]


def encode_frame(cloud: PointCloud) -> bytes:
    payload = np.ascontiguousarray(cloud.data, dtype="<f4")
    return _HEADER.pack(FRAME_MAGIC, FRAME_VERSION, len(cloud), FIELD_COUNT) + payload.tobytes()


def decode_frame(blob: bytes, source: str = "<bytes>") -> PointCloud:
    if len(blob) < HEADER_SIZE:
        if len(blob) >= 4 and blob[:4] != FRAME_MAGIC:
            raise MagicMismatch(f"{source}: bad magic {blob[:4]!r}, expected {FRAME_MAGIC!r}")
        raise TruncatedFrame(f"{source}: {len(blob)} bytes is shorter than the {HEADER_SIZE}-byte header")
    magic, version, count, fields = _HEADER.unpack_from(blob, 0)
    if magic != FRAME_MAGIC:
        raise MagicMismatch(f"{source}: bad magic {magic!r}, expected {FRAME_MAGIC!r}")
    if version != FRAME_VERSION:
        raise VersionMismatch(f"{source}: frame version {version}, this reader supports {FRAME_VERSION}")
    if fields != FIELD_COUNT:
        raise VersionMismatch(f"{source}: {fields} fields per point, expected {FIELD_COUNT}")
    expected = HEADER_SIZE + count * FIELD_COUNT * 4
    if len(blob) < expected:
        raise TruncatedFrame(f"{source}: expected {expected} bytes for {count} points, found {len(blob)}")
    if len(blob) > expected:
        logger.warning(f"{source}: {len(blob) - expected} trailing bytes ignored")
    values = np.frombuffer(blob, dtype="<f4", count=count * FIELD_COUNT, offset=HEADER_SIZE)
    return PointCloud(values.reshape(count, FIELD_COUNT).astype(np.float64), validate=False)


def write_frame(path: PathLike, cloud: PointCloud) -> None:
    """Write ``cloud`` as float32; values not representable in float32 are rounded."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_frame(cloud))


def read_frame(path: PathLike) -> PointCloud:
    path = Path(path)
    return decode_frame(path.read_bytes(), source=str(path))
