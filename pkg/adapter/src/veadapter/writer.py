"""Output-file writers.

The binary store layout is the consumer's contract (magic "VEEM", version 1,
u64 count, u32 dim, float32 rows, then a u16-length-prefixed UTF-8 id
table, all little-endian).  Every writer is atomic: content goes to a
temporary sibling first and is renamed into place.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"VEEM"
VERSION = 1
HEADER = struct.Struct("<4sIQI")


def _atomic_write(path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def store_bytes(ids, matrix: np.ndarray) -> bytes:
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise ValueError("matrix must be 2-dimensional")
    if len(ids) != matrix.shape[0]:
        raise ValueError("id count does not match row count")
    if not np.isfinite(matrix).all():
        raise ValueError("non-finite embedding values")
    chunks = [HEADER.pack(MAGIC, VERSION, matrix.shape[0], matrix.shape[1])]
    chunks.append(matrix.tobytes())
    for sid in ids:
        raw = str(sid).encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValueError(f"id too long: {sid[:32]!r}...")
        chunks.append(struct.pack("<H", len(raw)) + raw)
    return b"".join(chunks)


def write_store(path, ids, matrix: np.ndarray) -> None:
    _atomic_write(path, store_bytes(ids, matrix))


def write_jsonl(path, records) -> None:
    payload = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    _atomic_write(path, payload.encode("utf-8"))


def write_provenance(path, payload: dict) -> None:
    _atomic_write(
        path, (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")
    )
