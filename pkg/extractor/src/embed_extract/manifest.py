"""Reader for the corpus manifest interchange format.

Only the fields the extractor needs are modeled; the engine that consumes
the EMB1 output owns full validation of the corpus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

TEXT_CATEGORIES = ("identifier", "title", "summary", "body")
ALL_CATEGORIES = TEXT_CATEGORIES + ("image", "table", "link")


@dataclass(frozen=True)
class ManifestObject:
    object_id: str
    bbox: tuple[float, float, float, float]
    category: str
    text: str | None
    cells: tuple[tuple[str, ...], ...] | None


@dataclass(frozen=True)
class ManifestPage:
    page_index: int
    width: float
    height: float
    objects: tuple[ManifestObject, ...]


@dataclass(frozen=True)
class ManifestDocument:
    doc_id: str
    source_id: str
    pages: tuple[ManifestPage, ...]


def load_manifest(path: str | Path) -> tuple[ManifestDocument, ...]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    docs = []
    for d in raw["documents"]:
        pages = []
        for p in d["pages"]:
            objects = []
            for o in p["objects"]:
                category = o["category"]
                if category not in ALL_CATEGORIES:
                    raise ValueError(f"object '{o['object_id']}' has unknown category {category!r}")
                cells = o.get("cells")
                objects.append(
                    ManifestObject(
                        object_id=o["object_id"],
                        bbox=tuple(float(v) for v in o["bbox"]),
                        category=category,
                        text=o.get("text"),
                        cells=None if cells is None else tuple(tuple(row) for row in cells),
                    )
                )
            pages.append(
                ManifestPage(
                    page_index=int(p["page_index"]),
                    width=float(p["width"]),
                    height=float(p["height"]),
                    objects=tuple(objects),
                )
            )
        docs.append(ManifestDocument(doc_id=d["doc_id"], source_id=d["source_id"], pages=tuple(pages)))
    return tuple(docs)
