"""CLI: extract CNN features from a video or frame directory into the
binary feature-file format, with a JSON sidecar manifest.

    v2c-extract --backbone resnet50 --frames 30 --in clip_dir --out clip.v2cf

Weights come from, in order of precedence: --weights PATH (a local
state-dict snapshot), --random-weights SEED (seeded random init, for
pipeline validation only), or the torchvision cache of the ImageNet
pretrained weights.  Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .backbones import BACKBONES, FeatureBackbone
from .errors import ExtractorError, UsageError
from .feature_io import write_feature_file
from .media import load_frames


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def extract(backbone: FeatureBackbone, source, n_frames: int):
    """Feature rows for up to n_frames sampled frames, plus the pad vector."""
    frames = load_frames(source, n_frames)
    rows = np.stack([backbone.features(frame) for frame in frames])
    return backbone.pad_feature(), rows


def build_parser():
    parser = _Parser(prog="v2c-extract", description=__doc__.splitlines()[0])
    parser.add_argument("--backbone", required=True, choices=sorted(BACKBONES))
    parser.add_argument("--frames", type=int, default=30)
    parser.add_argument("--in", dest="source", required=True,
                        help="video file or directory of frame images")
    parser.add_argument("--out", required=True, help="output feature file")
    parser.add_argument("--weights", default=None,
                        help="local state-dict snapshot for the backbone")
    parser.add_argument("--random-weights", dest="random_seed", type=int, default=None,
                        help="seeded random backbone init (pipeline validation only)")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.frames < 1:
            raise UsageError("--frames must be >= 1")
        backbone = FeatureBackbone.build(args.backbone, weights_path=args.weights,
                                         random_seed=args.random_seed)
        pad_vector, rows = extract(backbone, args.source, args.frames)
        write_feature_file(pad_vector, rows, args.out)
        manifest = {
            "tool": "v2c-extract",
            "backbone": backbone.spec.name,
            "layer": backbone.spec.layer,
            "feature_dim": backbone.spec.feature_dim,
            "weights": backbone.weights_label,
            "preprocessing": {
                "resize_shorter_side": backbone.spec.resize,
                "center_crop": backbone.spec.crop,
                "normalize": "imagenet mean/std",
            },
            "source": str(args.source),
            "frames_requested": args.frames,
            "frames_written": int(rows.shape[0]),
            "output": str(args.out),
            "output_sha256": hashlib.sha256(Path(args.out).read_bytes()).hexdigest(),
        }
        Path(f"{args.out}.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        return 0
    except ExtractorError as exc:
        print(f"v2c-extract: error: {exc}", file=sys.stderr)
        return exc.exit_code


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
