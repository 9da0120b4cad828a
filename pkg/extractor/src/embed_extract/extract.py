"""Batch extraction: corpus manifest + page rasters -> two EMB1 files."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from PIL import Image

from .backbones import HfTextBackbone, ResNetVisionBackbone, TextBackbone, VisionBackbone
from .emb1 import write_emb1
from .inputs import crop_object, text_input_for
from .manifest import ManifestDocument, load_manifest


@dataclass(frozen=True)
class ExtractorConfig:
    text_model: str = "PlanTL-GOB-ES/roberta-base-bne"
    vision_model: str = "resnet18"
    vision_weights: str | None = "IMAGENET1K_V1"
    dpi: int = 150  # rendering default for whoever produces the rasters
    device: str = "cpu"
    batch_size: int = 16

    def __post_init__(self) -> None:
        if self.dpi < 72:
            raise ValueError("render DPI must be >= 72")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.vision_model != "resnet18":
            raise ValueError(f"unsupported vision model {self.vision_model!r}")


def default_backbones(config: ExtractorConfig) -> tuple[TextBackbone, VisionBackbone]:
    return (
        HfTextBackbone(config.text_model, device=config.device),
        ResNetVisionBackbone(config.vision_weights, device=config.device),
    )


@dataclass
class ExtractionReport:
    objects: int = 0
    pages: int = 0
    degenerate_crops: list[str] = field(default_factory=list)
    text_path: Path | None = None
    vision_path: Path | None = None


def raster_path(rasters_dir: str | Path, doc_id: str, page_index: int) -> Path:
    return Path(rasters_dir) / doc_id / f"{page_index}.png"


def _batched(items: list, size: int):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def extract_documents(
    docs: Sequence[ManifestDocument],
    rasters_dir: str | Path,
    text_backbone: TextBackbone,
    vision_backbone: VisionBackbone,
    batch_size: int = 16,
) -> tuple[dict, dict, ExtractionReport]:
    """Embeddings for every layout object of every page, both modalities."""
    report = ExtractionReport()
    text_entries: dict = {}
    vision_entries: dict = {}
    for doc in docs:
        for page in doc.pages:
            path = raster_path(rasters_dir, doc.doc_id, page.page_index)
            if not path.exists():
                raise FileNotFoundError(
                    f"missing raster for document '{doc.doc_id}' page {page.page_index}: {path}"
                )
            raster = Image.open(path)
            report.pages += 1
            ids = [o.object_id for o in page.objects]
            texts = [text_input_for(o) for o in page.objects]
            crops = []
            for o in page.objects:
                crop, degenerate = crop_object(raster, o.bbox, page.width, page.height)
                if degenerate:
                    report.degenerate_crops.append(o.object_id)
                crops.append(crop)
            for batch_ids, batch_texts in zip(_batched(ids, batch_size), _batched(texts, batch_size)):
                vecs = text_backbone.embed(batch_texts)
                for object_id, vec in zip(batch_ids, vecs):
                    text_entries[object_id] = vec
            for batch_ids, batch_crops in zip(_batched(ids, batch_size), _batched(crops, batch_size)):
                vecs = vision_backbone.embed(batch_crops)
                for object_id, vec in zip(batch_ids, vecs):
                    vision_entries[object_id] = vec
            report.objects += len(ids)
    return text_entries, vision_entries, report


def run_extraction(
    manifest_path: str | Path,
    rasters_dir: str | Path,
    out_dir: str | Path,
    text_backbone: TextBackbone,
    vision_backbone: VisionBackbone,
    batch_size: int = 16,
) -> ExtractionReport:
    """Write text.emb1 and vision.emb1 covering every object in the manifest."""
    docs = load_manifest(manifest_path)
    text_entries, vision_entries, report = extract_documents(
        docs, rasters_dir, text_backbone, vision_backbone, batch_size
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.text_path = out / "text.emb1"
    report.vision_path = out / "vision.emb1"
    write_emb1(text_entries, "text", text_backbone.hidden_size, report.text_path)
    write_emb1(vision_entries, "vision", vision_backbone.feature_size, report.vision_path)
    return report
