"""EPNN checkpoints: named float64 tensors, little-endian, plus a JSON config sidecar.

    magic "EPNN" | version u32 | tensor count u32
    per tensor: name length u32 | name utf-8 | rank u32 | dims u32 * rank | values f64 * prod(dims)
"""

import json
import logging
import os
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np
import torch

from eplidar.errors import CheckpointError

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"EPNN"
CHECKPOINT_VERSION = 1

PathLike = Union[str, os.PathLike]


def _sidecar(path: Path) -> Path:
    return path.with_suffix(path.suffix + ".json")


def encode_state(state: Mapping[str, torch.Tensor]) -> bytes:
    parts = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(state))]
    for name, tensor in state.items():
        raw = name.encode("utf-8")
        values = tensor.detach().cpu().to(torch.float64).numpy()
        parts.append(struct.pack("<I", len(raw)) + raw)
        parts.append(struct.pack(f"<I{values.ndim}I", values.ndim, *values.shape))
        parts.append(np.ascontiguousarray(values, dtype="<f8").tobytes())
    return b"".join(parts)


def decode_state(blob: bytes, source: str = "<bytes>") -> "OrderedDict[str, torch.Tensor]":
    def take(fmt: str, offset: int):
        size = struct.calcsize(fmt)
        if offset + size > len(blob):
            raise CheckpointError(f"{source}: truncated checkpoint at byte {offset}")
        return struct.unpack_from(fmt, blob, offset), offset + size

    if blob[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{source}: bad magic {blob[:4]!r}, expected {CHECKPOINT_MAGIC!r}")
    (version, count), off = take("<II", 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{source}: checkpoint version {version}, expected {CHECKPOINT_VERSION}")
    state: "OrderedDict[str, torch.Tensor]" = OrderedDict()
    for _ in range(count):
        (name_len,), off = take("<I", off)
        if off + name_len > len(blob):
            raise CheckpointError(f"{source}: truncated tensor name at byte {off}")
        name = blob[off:off + name_len].decode("utf-8")
        off += name_len
        (rank,), off = take("<I", off)
        dims, off = take(f"<{rank}I", off)
        n = int(np.prod(dims)) if rank else 1
        if off + 8 * n > len(blob):
            raise CheckpointError(f"{source}: truncated values for '{name}'")
        values = np.frombuffer(blob, dtype="<f8", count=n, offset=off).reshape(dims)
        off += 8 * n
        state[name] = torch.from_numpy(values.astype(np.float64))
    if off != len(blob):
        raise CheckpointError(f"{source}: {len(blob) - off} unexpected trailing bytes")
    return state


def save_checkpoint(path: PathLike, model: Union[torch.nn.Module, Mapping[str, torch.Tensor]],
                    config: Optional[Dict[str, Any]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    state = model.state_dict() if isinstance(model, torch.nn.Module) else model
    path.write_bytes(encode_state(state))
    if config is not None:
        _sidecar(path).write_text(json.dumps(config, indent=2, sort_keys=True), encoding="utf-8")
    logger.debug(f"Saved checkpoint {path} ({len(state)} tensors)")
    return path


def load_checkpoint(path: PathLike) -> Tuple["OrderedDict[str, torch.Tensor]", Optional[Dict[str, Any]]]:
    path = Path(path)
    state = decode_state(path.read_bytes(), source=str(path))
    side = _sidecar(path)
    config = json.loads(side.read_text(encoding="utf-8")) if side.exists() else None
    return state, config
