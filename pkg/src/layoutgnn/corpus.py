"""Document / page / layout-object data model, manifest ingestion and
synthesis.

A corpus is a sequence of documents; each document belongs to one source
(one official gazette) and holds one or more pages; each page holds an
ordered sequence of layout objects. The object order in the manifest is
load-bearing: graph node ``i`` always refers to ``page.objects[i]``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvariantError, ParseError, SchemaError


class Category(enum.Enum):
    """The seven layout-object categories."""

    IMAGE = "image"
    TABLE = "table"
    LINK = "link"
    IDENTIFIER = "identifier"
    TITLE = "title"
    SUMMARY = "summary"
    BODY = "body"


#: The four supervised text classes, in label-index order.
TEXT_CLASSES = (Category.IDENTIFIER, Category.TITLE, Category.SUMMARY, Category.BODY)
#: category -> class index 0..3 for supervised nodes
LABEL_INDEX = {cat: i for i, cat in enumerate(TEXT_CLASSES)}
#: class index -> wire name
LABEL_NAMES = tuple(cat.value for cat in TEXT_CLASSES)
N_CLASSES = len(TEXT_CLASSES)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in page points; origin top-left, y grows downward."""

    x0: float
    y0: float
    x1: float
    y1: float

    def is_valid(self) -> bool:
        coords = (self.x0, self.y0, self.x1, self.y1)
        return all(math.isfinite(c) for c in coords) and self.x0 < self.x1 and self.y0 < self.y1

    def as_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]


@dataclass(frozen=True)
class LayoutObject:
    object_id: str
    bbox: BBox
    category: Category
    text: str | None = None
    cells: tuple[tuple[str, ...], ...] | None = None


@dataclass(frozen=True)
class Page:
    page_index: int
    width: float
    height: float
    objects: tuple[LayoutObject, ...]


@dataclass(frozen=True)
class Document:
    doc_id: str
    source_id: str
    pages: tuple[Page, ...]


def validate_documents(docs: Sequence[Document], collect: bool = False) -> list[str]:
    """Check every data-model invariant.

    Raises :class:`InvariantError` on the first violation, or, with
    ``collect=True``, returns the full list of violation messages instead.
    """
    problems: list[str] = []

    def fail(msg: str) -> None:
        if collect:
            problems.append(msg)
        else:
            raise InvariantError(msg)

    for doc in docs:
        if len(doc.pages) < 1:
            fail(f"document '{doc.doc_id}' has no pages")
        seen_ids: set[str] = set()
        seen_pages: set[int] = set()
        for page in doc.pages:
            if page.page_index < 0:
                fail(f"document '{doc.doc_id}': negative page_index {page.page_index}")
            if page.page_index in seen_pages:
                fail(f"document '{doc.doc_id}': duplicate page_index {page.page_index}")
            seen_pages.add(page.page_index)
            if not (math.isfinite(page.width) and math.isfinite(page.height)) or page.width <= 0 or page.height <= 0:
                fail(f"document '{doc.doc_id}' page {page.page_index}: bad page size")
                continue
            for obj in page.objects:
                if obj.object_id in seen_ids:
                    fail(f"duplicate object_id '{obj.object_id}' in document '{doc.doc_id}'")
                seen_ids.add(obj.object_id)
                b = obj.bbox
                if not b.is_valid():
                    fail(f"object '{obj.object_id}': degenerate or non-finite bbox {b.as_list()}")
                    continue
                if b.x0 < 0 or b.y0 < 0 or b.x1 > page.width or b.y1 > page.height:
                    fail(f"object '{obj.object_id}': bbox {b.as_list()} outside page bounds")
                needs_text = obj.category in TEXT_CLASSES or obj.category is Category.LINK
                if needs_text and obj.text is None:
                    fail(f"object '{obj.object_id}': category '{obj.category.value}' requires text")
                if not needs_text and obj.text is not None:
                    fail(f"object '{obj.object_id}': category '{obj.category.value}' must not carry text")
                if obj.category is Category.TABLE and obj.cells is None:
                    fail(f"object '{obj.object_id}': table requires cells")
                if obj.category is not Category.TABLE and obj.cells is not None:
                    fail(f"object '{obj.object_id}': category '{obj.category.value}' must not carry cells")
    return problems


# ---------------------------------------------------------------------------
# manifest (de)serialization
# ---------------------------------------------------------------------------

def _require(mapping: dict, field: str, ctx: str):
    if not isinstance(mapping, dict):
        raise SchemaError(f"expected an object for {ctx}")
    if field not in mapping:
        raise SchemaError(f"missing field '{field}' in {ctx}")
    return mapping[field]


def _as_number(value, field: str, ctx: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"field '{field}' in {ctx} must be a number")
    return float(value)


def _object_from_dict(raw: dict, ctx: str) -> LayoutObject:
    object_id = _require(raw, "object_id", ctx)
    if not isinstance(object_id, str):
        raise SchemaError(f"field 'object_id' in {ctx} must be a string")
    octx = f"object '{object_id}'"
    bbox_raw = _require(raw, "bbox", octx)
    if not isinstance(bbox_raw, list) or len(bbox_raw) != 4:
        raise SchemaError(f"field 'bbox' in {octx} must be a list of 4 numbers")
    bbox = BBox(*(_as_number(v, "bbox", octx) for v in bbox_raw))
    cat_raw = _require(raw, "category", octx)
    try:
        category = Category(cat_raw)
    except ValueError:
        raise SchemaError(f"field 'category' in {octx} has unknown value {cat_raw!r}") from None
    text = _require(raw, "text", octx)
    if text is not None and not isinstance(text, str):
        raise SchemaError(f"field 'text' in {octx} must be a string or null")
    cells_raw = _require(raw, "cells", octx)
    cells: tuple[tuple[str, ...], ...] | None = None
    if cells_raw is not None:
        if not isinstance(cells_raw, list) or not all(
            isinstance(row, list) and all(isinstance(c, str) for c in row) for row in cells_raw
        ):
            raise SchemaError(f"field 'cells' in {octx} must be a list of lists of strings")
        cells = tuple(tuple(row) for row in cells_raw)
    return LayoutObject(object_id=object_id, bbox=bbox, category=category, text=text, cells=cells)


def _page_from_dict(raw: dict, ctx: str) -> Page:
    page_index = _require(raw, "page_index", ctx)
    if isinstance(page_index, bool) or not isinstance(page_index, int):
        raise SchemaError(f"field 'page_index' in {ctx} must be an integer")
    pctx = f"{ctx} page {page_index}"
    width = _as_number(_require(raw, "width", pctx), "width", pctx)
    height = _as_number(_require(raw, "height", pctx), "height", pctx)
    objects_raw = _require(raw, "objects", pctx)
    if not isinstance(objects_raw, list):
        raise SchemaError(f"field 'objects' in {pctx} must be a list")
    objects = tuple(_object_from_dict(o, pctx) for o in objects_raw)
    return Page(page_index=page_index, width=width, height=height, objects=objects)


def documents_from_dict(raw: dict) -> tuple[Document, ...]:
    docs_raw = _require(raw, "documents", "manifest")
    if not isinstance(docs_raw, list):
        raise SchemaError("field 'documents' in manifest must be a list")
    docs = []
    for d in docs_raw:
        doc_id = _require(d, "doc_id", "document")
        if not isinstance(doc_id, str):
            raise SchemaError("field 'doc_id' in document must be a string")
        dctx = f"document '{doc_id}'"
        source_id = _require(d, "source_id", dctx)
        if not isinstance(source_id, str):
            raise SchemaError(f"field 'source_id' in {dctx} must be a string")
        pages_raw = _require(d, "pages", dctx)
        if not isinstance(pages_raw, list):
            raise SchemaError(f"field 'pages' in {dctx} must be a list")
        pages = tuple(_page_from_dict(p, dctx) for p in pages_raw)
        docs.append(Document(doc_id=doc_id, source_id=source_id, pages=pages))
    return tuple(docs)


def documents_to_dict(docs: Sequence[Document]) -> dict:
    return {
        "documents": [
            {
                "doc_id": doc.doc_id,
                "source_id": doc.source_id,
                "pages": [
                    {
                        "page_index": page.page_index,
                        "width": page.width,
                        "height": page.height,
                        "objects": [
                            {
                                "object_id": obj.object_id,
                                "bbox": obj.bbox.as_list(),
                                "category": obj.category.value,
                                "text": obj.text,
                                "cells": None if obj.cells is None else [list(r) for r in obj.cells],
                            }
                            for obj in page.objects
                        ],
                    }
                    for page in doc.pages
                ],
            }
            for doc in docs
        ]
    }


def manifest_json(docs: Sequence[Document]) -> str:
    """Canonical manifest text; stable byte-for-byte for a fixed corpus."""
    return json.dumps(documents_to_dict(docs), ensure_ascii=False, indent=2) + "\n"


def write_manifest(docs: Sequence[Document], path: str | Path) -> None:
    Path(path).write_text(manifest_json(docs), encoding="utf-8")


def ingest_manifest(path: str | Path) -> tuple[Document, ...]:
    """Load and fully validate a corpus manifest."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read manifest {path}: {e}") from e
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"manifest {path} is not valid JSON: {e}") from e
    docs = documents_from_dict(raw)
    validate_documents(docs)
    return docs


# ---------------------------------------------------------------------------
# synthetic corpus
# ---------------------------------------------------------------------------

_PAGE_W = 612.0
_PAGE_H = 792.0
_MARGIN = 36.0
_SYLLABLES = (
    "ba", "co", "du", "fi", "ga", "he", "ki", "lo",
    "mu", "na", "pe", "ra", "si", "to", "ve", "zu",
)
_CATEGORY_POOL = (
    Category.BODY, Category.TITLE, Category.SUMMARY, Category.IDENTIFIER,
    Category.IMAGE, Category.TABLE, Category.LINK,
)
_CATEGORY_PROBS = (0.30, 0.14, 0.12, 0.12, 0.12, 0.12, 0.08)


def _pseudo_word(rng: np.random.Generator) -> str:
    n = int(rng.integers(2, 5))
    return "".join(str(_SYLLABLES[int(rng.integers(0, len(_SYLLABLES)))]) for _ in range(n))


def _pseudo_text(rng: np.random.Generator, lo: int, hi: int) -> str:
    return " ".join(_pseudo_word(rng) for _ in range(int(rng.integers(lo, hi + 1))))


def _object_payload(rng: np.random.Generator, category: Category):
    """(text, cells) appropriate for the category."""
    if category in TEXT_CLASSES:
        spans = {
            Category.IDENTIFIER: (1, 2),
            Category.TITLE: (2, 5),
            Category.SUMMARY: (4, 9),
            Category.BODY: (6, 14),
        }[category]
        return _pseudo_text(rng, *spans), None
    if category is Category.LINK:
        return f"https://example.test/{_pseudo_word(rng)}", None
    if category is Category.TABLE:
        rows = int(rng.integers(1, 4))
        cols = int(rng.integers(1, 4))
        return None, tuple(tuple(_pseudo_word(rng) for _ in range(cols)) for _ in range(rows))
    return None, None


def make_synthetic_corpus(
    seed: int,
    n_docs: int,
    pages_per_doc: int,
    objects_per_page: int,
    source_id: str = "SYN",
) -> tuple[Document, ...]:
    """Deterministic desk-scale corpus with non-overlapping reading-order bands.

    Every page keeps at least one supervised text node; the category draw
    covers all seven categories with positive probability.
    """
    if min(n_docs, pages_per_doc, objects_per_page) < 1:
        raise ValueError("all synthetic corpus counts must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([0x1A70, seed]))
    usable_h = _PAGE_H - 2 * _MARGIN
    band_h = usable_h / objects_per_page
    pad = min(2.0, band_h * 0.15)
    docs = []
    for d in range(n_docs):
        doc_id = f"{source_id}-{d:04d}"
        pages = []
        for p in range(pages_per_doc):
            objs = []
            cats = [
                _CATEGORY_POOL[int(rng.choice(len(_CATEGORY_POOL), p=_CATEGORY_PROBS))]
                for _ in range(objects_per_page)
            ]
            if not any(c in TEXT_CLASSES for c in cats):
                cats[0] = TEXT_CLASSES[int(rng.integers(0, len(TEXT_CLASSES)))]
            for i, category in enumerate(cats):
                y0 = _MARGIN + i * band_h + pad
                y1 = y0 + max(band_h - 2 * pad, 1.0) * (0.5 + 0.5 * float(rng.random()))
                y1 = min(y1, _MARGIN + (i + 1) * band_h - pad)
                usable_w = _PAGE_W - 2 * _MARGIN
                x0 = _MARGIN + float(rng.random()) * usable_w * 0.3
                x1 = x0 + max(12.0, float(rng.random()) * (usable_w - (x0 - _MARGIN)))
                x1 = min(x1, _PAGE_W - _MARGIN)
                text, cells = _object_payload(rng, category)
                objs.append(
                    LayoutObject(
                        object_id=f"{doc_id}-p{p}-o{i}",
                        bbox=BBox(round(x0, 2), round(y0, 2), round(x1, 2), round(y1, 2)),
                        category=category,
                        text=text,
                        cells=cells,
                    )
                )
            pages.append(Page(page_index=p, width=_PAGE_W, height=_PAGE_H, objects=tuple(objs)))
        docs.append(Document(doc_id=doc_id, source_id=source_id, pages=tuple(pages)))
    result = tuple(docs)
    validate_documents(result)
    return result
