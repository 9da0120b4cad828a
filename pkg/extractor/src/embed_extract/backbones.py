"""Frozen text and vision backbones behind small embedding protocols.

The production text backbone is a pretrained Spanish RoBERTa-base whose
final-layer first-position ([CLS]) embedding represents the whole input;
the vision backbone is ResNet-18 with the classification head removed,
yielding the pooled penultimate features. Both run in eval mode under
no_grad, so repeated extraction is bit-deterministic.
"""

from __future__ import annotations

from typing import Protocol, Sequence

import numpy as np
import torch
from PIL import Image

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
CROP_SIZE = 224


class TextBackbone(Protocol):
    hidden_size: int

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


class VisionBackbone(Protocol):
    feature_size: int

    def embed(self, images: Sequence[Image.Image]) -> np.ndarray: ...


class HfTextBackbone:
    """[CLS] embeddings from a HuggingFace masked-LM encoder; inputs are
    truncated at the model maximum, keeping the leading tokens."""

    def __init__(self, model_name: str, device: str = "cpu"):
        from transformers import AutoModel, AutoTokenizer

        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = AutoModel.from_pretrained(model_name).to(device).eval()
        self.device = device
        self.hidden_size = int(self.model.config.hidden_size)
        limit = getattr(self.tokenizer, "model_max_length", 512)
        self.max_length = min(int(limit), 512)

    @torch.no_grad()
    def embed(self, texts: Sequence[str]) -> np.ndarray:
        batch = self.tokenizer(
            list(texts),
            return_tensors="pt",
            padding=True,
            truncation=True,
            max_length=self.max_length,
        ).to(self.device)
        out = self.model(**batch)
        cls = out.last_hidden_state[:, 0, :]
        return cls.cpu().numpy().astype(np.float32)


def preprocess_crop(image: Image.Image) -> torch.Tensor:
    """Bilinear resize to 224x224 plus ImageNet normalization."""
    rgb = image.convert("RGB").resize((CROP_SIZE, CROP_SIZE), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - np.array(IMAGENET_MEAN, dtype=np.float32)) / np.array(IMAGENET_STD, dtype=np.float32)
    return torch.from_numpy(arr.transpose(2, 0, 1))


class ResNetVisionBackbone:
    """Pooled penultimate ResNet-18 features (512-wide); ``weights=None``
    gives a seeded random initialization for offline use."""

    def __init__(self, weights: str | None = "IMAGENET1K_V1", device: str = "cpu", seed: int = 0):
        from torchvision.models import resnet18

        if weights is None:
            torch.manual_seed(seed)
            model = resnet18(weights=None)
        else:
            model = resnet18(weights=weights)
        self.feature_size = int(model.fc.in_features)
        model.fc = torch.nn.Identity()
        self.model = model.to(device).eval()
        self.device = device

    @torch.no_grad()
    def embed(self, images: Sequence[Image.Image]) -> np.ndarray:
        batch = torch.stack([preprocess_crop(im) for im in images]).to(self.device)
        feats = self.model(batch)
        return feats.cpu().numpy().astype(np.float32)
