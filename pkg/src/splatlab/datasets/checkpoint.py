"""Binary checkpoints.

A checkpoint is the magic ``b"WGS1"`` followed by a little-endian tensor
directory::

    u32 version
    u32 tensor count
    per tensor:
        u32 name length, name bytes (UTF-8)
        u32 rank, rank x u64 extents
        float64 payload in C order

"""

from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

from ..core.errors import CheckpointError, ContractViolation


__all__ = [
    "MAGIC",
    "VERSION",
    "dumps",
    "loads",
    "save_checkpoint",
    "load_checkpoint",
]

logger = logging.getLogger(__name__)


MAGIC = b"WGS1"
VERSION = 1


def dumps(tensors: Mapping[str, np.ndarray]) -> bytes:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, values in tensors.items():
        values = np.asarray(values)
        if not np.issubdtype(values.dtype, np.number):
            raise ContractViolation(f"tensor '{name}' must be numeric; got dtype {values.dtype}")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack(f"<I{values.ndim}Q", values.ndim, *values.shape))
        chunks.append(np.ascontiguousarray(values, dtype="<f8").tobytes())
    return b"".join(chunks)


class _Reader:
    def __init__(self, blob: bytes) -> None:
        self.blob = blob
        self.pos = 0

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.blob):
            raise CheckpointError(
                f"checkpoint is truncated at byte {self.pos} (needed {size} more)"
            )
        chunk = self.blob[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def loads(blob: bytes) -> dict[str, np.ndarray]:
    reader = _Reader(blob)
    magic = reader.take(len(MAGIC))
    if magic != MAGIC:
        raise CheckpointError(f"bad checkpoint magic {magic!r}; expected {MAGIC!r}")
    version, count = reader.unpack("<II")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}; expected {VERSION}")

    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (length,) = reader.unpack("<I")
        try:
            name = reader.take(length).decode("utf-8")
        except UnicodeDecodeError as e:
            raise CheckpointError(f"tensor name is not UTF-8 at byte {reader.pos}") from e
        (rank,) = reader.unpack("<I")
        shape = reader.unpack(f"<{rank}Q")
        size = int(np.prod(shape, dtype=np.int64))
        payload = reader.take(8 * size)
        tensors[name] = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(shape)
    if reader.pos != len(blob):
        raise CheckpointError(f"{len(blob) - reader.pos} trailing bytes after the tensor directory")
    return tensors


def save_checkpoint(path: str | Path, tensors: Mapping[str, np.ndarray]) -> None:
    path = Path(path)
    path.write_bytes(dumps(tensors))
    logger.info("wrote checkpoint %s (%d tensors)", path, len(tensors))


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    return loads(Path(path).read_bytes())
