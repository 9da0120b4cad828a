import json

import numpy as np
import pytest
import torch
from PIL import Image, ImageDraw

from embed_extract.backbones import preprocess_crop


class ByteRobertaTextBackbone:
    """Architecture-faithful offline stand-in: a tiny randomly initialized
    RoBERTa encoder over raw UTF-8 bytes. Same contract as the production
    backbone: final-layer first-position embedding, head-kept truncation."""

    CLS, PAD, SEP, OFFSET = 0, 1, 2, 3

    def __init__(self, hidden_size=32, layers=2, max_length=48, seed=0):
        from transformers import RobertaConfig, RobertaModel

        torch.manual_seed(seed)
        config = RobertaConfig(
            vocab_size=256 + self.OFFSET,
            hidden_size=hidden_size,
            num_hidden_layers=layers,
            num_attention_heads=4,
            intermediate_size=2 * hidden_size,
            max_position_embeddings=max_length + 8,
            pad_token_id=self.PAD,
        )
        self.model = RobertaModel(config).eval()
        self.hidden_size = hidden_size
        self.max_length = max_length

    def _ids(self, text):
        body = [self.OFFSET + b for b in text.encode("utf-8")[: self.max_length - 2]]
        return [self.CLS] + body + [self.SEP]

    @torch.no_grad()
    def embed(self, texts):
        seqs = [self._ids(t) for t in texts]
        width = max(len(s) for s in seqs)
        ids = torch.full((len(seqs), width), self.PAD, dtype=torch.long)
        mask = torch.zeros((len(seqs), width), dtype=torch.long)
        for i, s in enumerate(seqs):
            ids[i, : len(s)] = torch.tensor(s)
            mask[i, : len(s)] = 1
        out = self.model(input_ids=ids, attention_mask=mask)
        return out.last_hidden_state[:, 0, :].numpy().astype(np.float32)


@pytest.fixture(scope="session")
def text_backbone():
    return ByteRobertaTextBackbone(seed=11)


@pytest.fixture(scope="session")
def vision_backbone():
    from embed_extract.backbones import ResNetVisionBackbone

    return ResNetVisionBackbone(weights=None, seed=7)


def toy_manifest_dict():
    """Three documents covering all seven categories."""

    def obj(object_id, bbox, category, text=None, cells=None):
        return {"object_id": object_id, "bbox": bbox, "category": category,
                "text": text, "cells": cells}

    return {
        "documents": [
            {
                "doc_id": "doc-a",
                "source_id": "SRC",
                "pages": [
                    {
                        "page_index": 0,
                        "width": 200.0,
                        "height": 300.0,
                        "objects": [
                            obj("a-title", [20.0, 20.0, 180.0, 40.0], "title", "Resolución general"),
                            obj("a-body", [20.0, 50.0, 180.0, 120.0], "body", "Artículo 1. Texto íntegro."),
                            obj("a-image", [20.0, 130.0, 100.0, 200.0], "image"),
                            obj("a-link", [20.0, 210.0, 180.0, 225.0], "link", "https://example.test/x"),
                        ],
                    },
                    {
                        "page_index": 1,
                        "width": 200.0,
                        "height": 300.0,
                        "objects": [
                            obj("a-summary", [20.0, 20.0, 180.0, 60.0], "summary", "Resumen breve"),
                            obj("a-table", [20.0, 70.0, 180.0, 150.0], "table",
                                cells=[["a", "b"], ["c"]]),
                        ],
                    },
                ],
            },
            {
                "doc_id": "doc-b",
                "source_id": "SRC",
                "pages": [
                    {
                        "page_index": 0,
                        "width": 200.0,
                        "height": 300.0,
                        "objects": [
                            obj("b-id", [20.0, 20.0, 80.0, 35.0], "identifier", "BOE-A-1"),
                            obj("b-body", [20.0, 45.0, 180.0, 140.0], "body", "Cuerpo del documento."),
                            obj("b-tiny", [20.0, 150.0, 20.1, 150.1], "image"),
                        ],
                    }
                ],
            },
            {
                "doc_id": "doc-c",
                "source_id": "SRC",
                "pages": [
                    {
                        "page_index": 0,
                        "width": 200.0,
                        "height": 300.0,
                        "objects": [
                            obj("c-title", [20.0, 20.0, 180.0, 45.0], "title", "Anuncio"),
                            obj("c-empty-body", [20.0, 55.0, 180.0, 90.0], "body", ""),
                        ],
                    }
                ],
            },
        ]
    }


def render_rasters(docs_dict, rasters_dir, scale=2):
    """Deterministic fake page rasters: white pages with colored boxes."""
    for d in docs_dict["documents"]:
        for p in d["pages"]:
            w, h = int(p["width"] * scale), int(p["height"] * scale)
            img = Image.new("RGB", (w, h), "white")
            draw = ImageDraw.Draw(img)
            for i, o in enumerate(p["objects"]):
                x0, y0, x1, y1 = [v * scale for v in o["bbox"]]
                color = ((i * 70) % 255, (i * 130) % 255, (i * 200) % 255)
                draw.rectangle([x0, y0, max(x1, x0 + 1), max(y1, y0 + 1)], outline=color, width=2)
            out = rasters_dir / d["doc_id"]
            out.mkdir(parents=True, exist_ok=True)
            img.save(out / f"{p['page_index']}.png")


@pytest.fixture()
def toy_corpus(tmp_path):
    raw = toy_manifest_dict()
    manifest = tmp_path / "corpus.json"
    manifest.write_text(json.dumps(raw, ensure_ascii=False), encoding="utf-8")
    rasters = tmp_path / "rasters"
    render_rasters(raw, rasters)
    return manifest, rasters


__all__ = ["ByteRobertaTextBackbone", "preprocess_crop", "toy_manifest_dict", "render_rasters"]
