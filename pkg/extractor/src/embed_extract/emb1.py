"""EMB1 writer: magic "EMB1", u8 modality (0 text, 1 vision), u32 count,
u32 dim, then [u16 id_len][id utf-8][dim f32] records sorted ascending by
object-id byte order; everything little-endian."""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

MODALITY_CODE = {"text": 0, "vision": 1}


def write_emb1(entries: dict[str, np.ndarray], modality: str, dim: int, path: str | Path) -> None:
    parts = [struct.pack("<4sBII", b"EMB1", MODALITY_CODE[modality], len(entries), dim)]
    for object_id in sorted(entries, key=lambda s: s.encode("utf-8")):
        vec = np.asarray(entries[object_id], dtype="<f4")
        if vec.shape != (dim,):
            raise ValueError(f"vector for '{object_id}' has shape {vec.shape}, expected ({dim},)")
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"non-finite value in vector for '{object_id}'")
        raw = object_id.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(vec.tobytes())
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(b"".join(parts))
    os.replace(tmp, path)
