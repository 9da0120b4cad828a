"""Per-object feature vector store for the text and vision modalities.

On disk a table is one EMB1 file (little-endian): magic ``EMB1``, u8
modality (0 = text, 1 = vision), u32 count, u32 dim, then ``count``
records of ``[u16 id_len][id UTF-8][dim * f32]`` sorted ascending by
object-id byte order. Vectors are stored as f32 and widened to f64 at
the training boundary.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Category, Document, Page
from .errors import CoverageError, FormatError, ModalityMismatch, NonFiniteValue

MAGIC = b"EMB1"
_HEADER = struct.Struct("<4sBII")
_MODALITY_CODE = {"text": 0, "vision": 1}
_CODE_MODALITY = {v: k for k, v in _MODALITY_CODE.items()}


@dataclass
class EmbeddingTable:
    modality: str  # "text" | "vision"
    dim: int
    entries: dict[str, np.ndarray]  # object_id -> f32 vector of length dim

    def __post_init__(self) -> None:
        if self.modality not in _MODALITY_CODE:
            raise ValueError(f"unknown modality {self.modality!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def validate(self) -> None:
        for object_id, vec in self.entries.items():
            if vec.shape != (self.dim,):
                raise FormatError(
                    f"vector for '{object_id}' has length {vec.shape}, expected ({self.dim},)"
                )
            if not np.all(np.isfinite(vec)):
                raise NonFiniteValue(f"non-finite value in vector for '{object_id}'")


def write_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    """Write an EMB1 file; byte-deterministic for a fixed table."""
    table.validate()
    ids = sorted(table.entries, key=lambda s: s.encode("utf-8"))
    parts = [_HEADER.pack(MAGIC, _MODALITY_CODE[table.modality], len(ids), table.dim)]
    for object_id in ids:
        raw = object_id.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise FormatError(f"object_id too long for EMB1: '{object_id[:32]}...'")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(np.asarray(table.entries[object_id], dtype="<f4").tobytes())
    blob = b"".join(parts)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


def load_embeddings(path: str | Path, expected_modality: str) -> EmbeddingTable:
    """Load and validate an EMB1 file."""
    if expected_modality not in _MODALITY_CODE:
        raise ValueError(f"unknown modality {expected_modality!r}")
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, code, count, dim = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if code not in _CODE_MODALITY:
        raise FormatError(f"{path}: unknown modality code {code}")
    if _CODE_MODALITY[code] != expected_modality:
        raise ModalityMismatch(
            f"{path}: file is {_CODE_MODALITY[code]}, expected {expected_modality}"
        )
    if dim < 1:
        raise FormatError(f"{path}: dim must be >= 1")
    entries: dict[str, np.ndarray] = {}
    offset = _HEADER.size
    prev_raw: bytes | None = None
    vec_bytes = dim * 4
    for _ in range(count):
        if offset + 2 > len(blob):
            raise FormatError(f"{path}: truncated record header")
        (id_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        if offset + id_len + vec_bytes > len(blob):
            raise FormatError(f"{path}: truncated record payload")
        raw = blob[offset : offset + id_len]
        offset += id_len
        if prev_raw is not None and raw <= prev_raw:
            raise FormatError(f"{path}: records not sorted ascending by object_id")
        prev_raw = raw
        object_id = raw.decode("utf-8")
        vec = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset).copy()
        offset += vec_bytes
        if not np.all(np.isfinite(vec)):
            raise NonFiniteValue(f"{path}: non-finite value in vector for '{object_id}'")
        entries[object_id] = vec
    if offset != len(blob):
        raise FormatError(f"{path}: {len(blob) - offset} trailing bytes")
    return EmbeddingTable(modality=expected_modality, dim=dim, entries=entries)


# ---------------------------------------------------------------------------
# synthetic features
# ---------------------------------------------------------------------------

def _hash_rng(*parts) -> np.random.Generator:
    key = "\x1f".join(str(p) for p in parts).encode("utf-8")
    digest = hashlib.blake2b(key, digest_size=16).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


def _unit(v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        v = np.zeros_like(v)
        v[0] = 1.0
        return v
    return v / norm


def synth_embeddings(
    docs: Sequence[Document],
    modality: str,
    dim: int,
    seed: int,
    signal: float = 0.5,
) -> EmbeddingTable:
    """Hash-seeded stand-in features: a unit pseudo-random vector per object
    plus ``signal`` times a category-dependent unit direction, so same-category
    objects are statistically closer than cross-category ones.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    axes = {
        cat: _unit(_hash_rng("category-axis", cat.value, modality, seed).standard_normal(dim))
        for cat in Category
    }
    entries: dict[str, np.ndarray] = {}
    for doc in docs:
        for page in doc.pages:
            for obj in page.objects:
                base = _unit(_hash_rng(obj.object_id, modality, seed).standard_normal(dim))
                vec = base + signal * axes[obj.category]
                entries[obj.object_id] = vec.astype(np.float32)
    return EmbeddingTable(modality=modality, dim=dim, entries=entries)


def page_features(table: EmbeddingTable, page: Page) -> np.ndarray:
    """Feature matrix (n x dim, f64) in page object order."""
    rows = []
    for obj in page.objects:
        vec = table.entries.get(obj.object_id)
        if vec is None:
            raise CoverageError(
                f"object '{obj.object_id}' has no {table.modality} feature vector"
            )
        rows.append(vec)
    if not rows:
        return np.zeros((0, table.dim))
    return np.asarray(rows, dtype=np.float64)
