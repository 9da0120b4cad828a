"""Reference feature extractor: corpus manifest + page rasters in,
EMB1 embedding files out, using frozen pretrained text and vision
backbones."""

from .backbones import HfTextBackbone, ResNetVisionBackbone, TextBackbone, VisionBackbone
from .extract import ExtractorConfig, default_backbones, extract_documents, run_extraction
from .inputs import crop_object, text_input_for
from .manifest import load_manifest

__version__ = "0.1.0"

__all__ = [
    "ExtractorConfig",
    "HfTextBackbone",
    "ResNetVisionBackbone",
    "TextBackbone",
    "VisionBackbone",
    "crop_object",
    "default_backbones",
    "extract_documents",
    "load_manifest",
    "run_extraction",
    "text_input_for",
]
