"""Command line for the reference extractor.

Consumes a corpus manifest plus a rasters directory laid out as
``<rasters>/<doc_id>/<page_index>.png`` and writes ``text.emb1`` and
``vision.emb1`` into the output directory. Downloads pretrained weights
on first use; both backbones run frozen in eval mode.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .extract import ExtractorConfig, default_backbones, run_extraction


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="embed-extract", description=__doc__)
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--rasters", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--text-model", default=ExtractorConfig.text_model)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)
    config = ExtractorConfig(
        text_model=args.text_model, device=args.device,
        batch_size=args.batch_size, dpi=args.dpi,
    )
    try:
        text_backbone, vision_backbone = default_backbones(config)
        report = run_extraction(
            args.manifest, args.rasters, args.out,
            text_backbone, vision_backbone, config.batch_size,
        )
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"embedded {report.objects} objects over {report.pages} pages")
    if report.degenerate_crops:
        print(f"warning: {len(report.degenerate_crops)} degenerate crops padded to 1px",
              file=sys.stderr)
    print(f"wrote {report.text_path} and {report.vision_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
