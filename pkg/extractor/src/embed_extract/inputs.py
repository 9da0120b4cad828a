"""Per-category model-input rules.

Text side: text blocks pass their raw content; images pass the string
"0"; links pass the URL; table cells are flattened row-major into a
single line joined by single spaces.

Vision side: the page raster is cropped to the object's bounding box
(points mapped to raster pixels); a crop that would round below one
pixel on either axis is padded to one pixel and flagged.
"""

from __future__ import annotations

from PIL import Image

from .manifest import ManifestObject, TEXT_CATEGORIES


def text_input_for(obj: ManifestObject) -> str:
    if obj.category in TEXT_CATEGORIES:
        return obj.text or ""
    if obj.category == "image":
        return "0"
    if obj.category == "link":
        return obj.text or ""
    if obj.category == "table":
        return " ".join(cell for row in (obj.cells or ()) for cell in row)
    raise ValueError(f"unknown category {obj.category!r}")


def crop_object(
    raster: Image.Image,
    bbox: tuple[float, float, float, float],
    page_width: float,
    page_height: float,
) -> tuple[Image.Image, bool]:
    """Crop the object from the page raster; returns (crop, was_degenerate).

    Point coordinates scale by the raster's actual pixel density, so the
    render DPI never needs to be known exactly.
    """
    sx = raster.width / page_width
    sy = raster.height / page_height
    x0, y0, x1, y1 = bbox
    left = max(0, min(raster.width - 1, round(x0 * sx)))
    top = max(0, min(raster.height - 1, round(y0 * sy)))
    right = max(0, min(raster.width, round(x1 * sx)))
    bottom = max(0, min(raster.height, round(y1 * sy)))
    degenerate = right <= left or bottom <= top
    if right <= left:
        right = left + 1
    if bottom <= top:
        bottom = top + 1
    return raster.crop((left, top, right, bottom)), degenerate
