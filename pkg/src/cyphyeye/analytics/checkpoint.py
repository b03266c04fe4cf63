"""Versioned binary checkpoints for trained models.

Layout: magic 'CPMD', version byte, kind byte, array count (u16); per array a
rank byte, u32 dims, then row-major float64 big-endian data; finally a stats
block (u32 length + canonical JSON). All multi-byte integers big-endian.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Sequence, Union

import numpy as np

MAGIC = b"CPMD"
VERSION = 1
KIND_LOG_MODEL = 1
KIND_AUTOENCODER = 2


class CheckpointError(ValueError):
    pass


def save_checkpoint(path: Union[str, Path], kind: int,
                    arrays: Sequence[np.ndarray], stats: dict) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([VERSION, kind]))
        fh.write(struct.pack(">H", len(arrays)))
        for arr in arrays:
            arr = np.asarray(arr, dtype=np.float64)
            fh.write(bytes([arr.ndim]))
            for dim in arr.shape:
                fh.write(struct.pack(">I", dim))
            fh.write(arr.astype(">f8").tobytes(order="C"))
        blob = json.dumps(stats, sort_keys=True, separators=(",", ":")).encode("utf-8")
        fh.write(struct.pack(">I", len(blob)))
        fh.write(blob)


def load_checkpoint(path: Union[str, Path]) -> tuple[int, list[np.ndarray], dict]:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise CheckpointError("bad magic")
        version, kind = fh.read(1)[0], fh.read(1)[0]
        if version != VERSION:
            raise CheckpointError(f"unsupported version {version}")
        (count,) = struct.unpack(">H", fh.read(2))
        arrays = []
        for _ in range(count):
            rank = fh.read(1)[0]
            shape = tuple(struct.unpack(">I", fh.read(4))[0] for _ in range(rank))
            n = int(np.prod(shape)) if shape else 1
            data = fh.read(n * 8)
            if len(data) < n * 8:
                raise CheckpointError("truncated array data")
            arrays.append(np.frombuffer(data, dtype=">f8").astype(np.float64).reshape(shape))
        (blob_len,) = struct.unpack(">I", fh.read(4))
        stats = json.loads(fh.read(blob_len).decode("utf-8"))
        return kind, arrays, stats
