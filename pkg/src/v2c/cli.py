"""Command-line interface: train, translate, eval, map.

Every run resolves its flags up front and records them, together with
sha256 digests of the input files, in a JSON run manifest; re-running with
the same manifest values reproduces outputs byte-for-byte in single-threaded
mode.  Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric
failure.  ``V2C_THREADS`` caps worker threads for batch translation;
``V2C_BACKEND`` selects the compute backend (see :mod:`v2c.kernels`).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .data import load_annotations, load_feature_file, prepare_sample, sample_frames
from .errors import DataError, UsageError, V2CError
from .kernels import get_backend
from .mapper import DEFAULT_THRESHOLD, load_robot_vocab, map_command
from .metrics import evaluate, make_corpus
from .model import ModelConfig, decode_greedy, encode, init_params
from .train import TrainConfig, load_checkpoint, save_checkpoint, train
from .vocab import build_vocab


class _Parser(argparse.ArgumentParser):
    """argparse flavor whose flag errors obey this package's exit codes."""

    def error(self, message):
        raise UsageError(message)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("V2C_THREADS", "1")))
    except ValueError:
        raise UsageError("V2C_THREADS must be an integer") from None


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(path, subcommand: str, flags: dict, inputs, outputs) -> None:
    manifest = {
        "component": "v2c",
        "version": __version__,
        "backend": get_backend(),
        "threads": _threads(),
        "subcommand": subcommand,
        "flags": flags,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
    }
    Path(path).write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _feature_path(features_dir, video_id: str) -> Path:
    path = Path(features_dir) / f"{video_id}.v2cf"
    if not path.exists():
        raise DataError(f"missing feature file {path}")
    return path


def _check_dim(config, ff, path):
    if ff.feature_dim != config.feature_dim:
        raise DataError(
            f"{path}: feature dim mismatch: expected {config.feature_dim}, "
            f"found {ff.feature_dim}"
        )


def _emit(text: str, out_path) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_train(args) -> int:
    annotations = load_annotations(args.annotations)
    if len(annotations) == 0:
        raise DataError(f"{args.annotations}: no annotation records")
    vocabulary = build_vocab(annotations.commands())
    feature_files = {}
    dims = set()
    input_paths = [Path(args.annotations)]
    for record in annotations:
        path = _feature_path(args.features, record.video_id)
        ff = load_feature_file(path)
        feature_files[record.video_id] = ff
        dims.add(ff.feature_dim)
        input_paths.append(path)
    if len(dims) != 1:
        raise DataError(f"inconsistent feature dims across files: {sorted(dims)}")
    config = ModelConfig(
        cell_kind=args.cell, hidden=args.hidden, feature_dim=dims.pop(),
        vocab_size=len(vocabulary), n_steps=args.frames, seed=args.seed,
    )
    params = init_params(config)
    samples = [
        prepare_sample(r.video_id, feature_files[r.video_id], r.command,
                       vocabulary, config.n_steps)
        for r in annotations
    ]
    train_config = TrainConfig(epochs=args.epochs, lr=args.lr,
                               batch_size=args.batch, seed=args.seed)
    log = train(params, samples, train_config)
    out = Path(args.out)
    save_checkpoint(params, vocabulary, out)
    vocabulary.save(f"{out}.vocab")
    Path(f"{out}.log").write_text(log.to_text(), encoding="utf-8")
    _write_manifest(
        f"{out}.manifest.json", "train",
        flags={
            "cell": args.cell, "hidden": args.hidden, "frames": args.frames,
            "epochs": args.epochs, "lr": args.lr, "batch": args.batch,
            "seed": args.seed, "init_range": config.init_range,
            "features": str(args.features), "annotations": str(args.annotations),
            "out": str(args.out),
        },
        inputs=input_paths,
        outputs=[out, f"{out}.vocab", f"{out}.log"],
    )
    return 0


def _translate_one(params, vocabulary, path):
    ff = load_feature_file(path)
    _check_dim(params.config, ff, path)
    frames, _ = sample_frames(ff.frames, params.config.n_steps, ff.pad_vector)
    result = decode_greedy(params, encode(params, frames))
    return Path(path).stem, " ".join(result.words(vocabulary))


def cmd_translate(args) -> int:
    params, vocabulary = load_checkpoint(args.checkpoint)
    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda p: _translate_one(params, vocabulary, p),
                                 args.features))
    else:
        rows = [_translate_one(params, vocabulary, p) for p in args.features]
    text = "".join(f"{video_id}\t{command}\n" for video_id, command in rows)
    _emit(text, args.out)
    manifest_path = args.manifest or (f"{args.out}.manifest.json" if args.out else None)
    if manifest_path:
        _write_manifest(
            manifest_path, "translate",
            flags={"checkpoint": str(args.checkpoint),
                   "features": [str(p) for p in args.features],
                   "out": str(args.out) if args.out else None},
            inputs=[args.checkpoint, *args.features],
            outputs=[args.out] if args.out else [],
        )
    return 0


def cmd_eval(args) -> int:
    annotations = load_annotations(args.annotations)
    if len(annotations) == 0:
        raise DataError(f"{args.annotations}: empty test set")
    input_paths = [Path(args.annotations)]
    if args.oracle:
        # ground truth scored against itself: validates the metric pipeline
        entries = [(r.video_id, r.command, [r.command]) for r in annotations]
    else:
        if not args.checkpoint or not args.features:
            raise UsageError("--checkpoint and --features are required unless --oracle")
        params, vocabulary = load_checkpoint(args.checkpoint)
        input_paths.append(Path(args.checkpoint))
        entries = []
        for record in annotations:
            path = _feature_path(args.features, record.video_id)
            input_paths.append(path)
            video_id, command = _translate_one(params, vocabulary, path)
            entries.append((video_id, tuple(command.split(" ")) if command else (),
                            [record.command]))
    report = evaluate(make_corpus(entries))
    _emit(report.to_text(), args.out)
    manifest_path = args.manifest or (f"{args.out}.manifest.json" if args.out else None)
    if manifest_path:
        _write_manifest(
            manifest_path, "eval",
            flags={"checkpoint": str(args.checkpoint) if args.checkpoint else None,
                   "features": str(args.features) if args.features else None,
                   "annotations": str(args.annotations), "oracle": bool(args.oracle)},
            inputs=input_paths,
            outputs=[args.out] if args.out else [],
        )
    return 0


def cmd_map(args) -> int:
    robot_vocab = load_robot_vocab(args.robot_vocab, threshold=args.threshold)
    if args.infile:
        lines = Path(args.infile).read_text(encoding="utf-8").splitlines()
    else:
        lines = sys.stdin.read().splitlines()
    out_rows = []
    for line in lines:
        if not line.strip():
            continue
        prefix = ""
        text = line
        if "\t" in line:  # translate output format: video_id<TAB>command
            video_id, text = line.split("\t", 1)
            prefix = f"{video_id}\t"
        mapped = map_command(text.split(), robot_vocab)
        if mapped.accepted:
            sims = ",".join(f"{mapped.similarities[s]:.3f}" for s in mapped.similarities)
            out_rows.append(f"{prefix}ok\t{' '.join(mapped.resolved())}\tsims={sims}")
        else:
            out_rows.append(f"{prefix}reject\t{mapped.reason}")
    text = "".join(row + "\n" for row in out_rows)
    _emit(text, args.out)
    manifest_path = args.manifest or (f"{args.out}.manifest.json" if args.out else None)
    if manifest_path:
        _write_manifest(
            manifest_path, "map",
            flags={"robot_vocab": str(args.robot_vocab), "threshold": args.threshold,
                   "in": str(args.infile) if args.infile else None},
            inputs=[args.robot_vocab] + ([args.infile] if args.infile else []),
            outputs=[args.out] if args.out else [],
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="v2c", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a translation model")
    p.add_argument("--features", required=True, help="directory of <video_id>.v2cf files")
    p.add_argument("--annotations", required=True, help="video_id<TAB>command lines")
    p.add_argument("--cell", choices=("lstm", "gru"), default="lstm")
    p.add_argument("--hidden", type=int, default=512)
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--epochs", type=int, default=150)
    p.add_argument("--lr", type=float, default=0.0001)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("translate", help="greedy-decode commands for feature files")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--features", nargs="+", required=True, help="feature file(s)")
    p.add_argument("--out", default=None)
    p.add_argument("--manifest", default=None)
    p.set_defaults(fn=cmd_translate)

    p = sub.add_parser("eval", help="score translations against annotations")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--features", default=None, help="directory of <video_id>.v2cf files")
    p.add_argument("--annotations", required=True)
    p.add_argument("--oracle", action="store_true",
                   help="score ground truth against itself (metric pipeline check)")
    p.add_argument("--out", default=None)
    p.add_argument("--manifest", default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("map", help="map generated commands to robot vocabulary")
    p.add_argument("--robot-vocab", required=True, dest="robot_vocab")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--in", dest="infile", default=None,
                   help="command lines (default: stdin)")
    p.add_argument("--out", default=None)
    p.add_argument("--manifest", default=None)
    p.set_defaults(fn=cmd_map)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except V2CError as exc:
        print(f"v2c: error: {exc}", file=sys.stderr)
        return exc.exit_code


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
