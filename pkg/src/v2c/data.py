"""Dataset plumbing: the binary per-video feature container, annotation
parsing, frame sampling/padding, and deterministic splitting.

Feature container layout (all little-endian):

    bytes 0..3    magic "V2CF"
    bytes 4..7    u32 format version (1)
    bytes 8..11   u32 feature_dim
    bytes 12..15  u32 frame_count
    then          feature_dim float32: the pad vector
    then          frame_count * feature_dim float32, row-major frames

The pad vector is produced by the feature extractor (the backbone's response
to the dataset mean image) and stands in for missing frames; this module
never computes it.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .vocab import Vocabulary, encode_command

FEATURE_MAGIC = b"V2CF"
FEATURE_VERSION = 1
_HEADER = struct.Struct("<4sIII")


@dataclass
class FeatureFile:
    """Per-frame feature rows plus the designated pad vector, as float64."""

    pad_vector: np.ndarray  # (feature_dim,)
    frames: np.ndarray      # (frame_count, feature_dim)

    def __post_init__(self):
        self.pad_vector = np.asarray(self.pad_vector, dtype=np.float64)
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.pad_vector.ndim != 1 or self.pad_vector.size == 0:
            raise DataError(f"pad vector must be a non-empty vector, got shape {self.pad_vector.shape}")
        if self.frames.ndim != 2 or self.frames.shape[1] != self.pad_vector.size:
            raise DataError(
                f"frames shape {self.frames.shape} inconsistent with feature_dim {self.pad_vector.size}"
            )
        if not (np.isfinite(self.pad_vector).all() and np.isfinite(self.frames).all()):
            raise DataError("feature values must be finite")

    @property
    def feature_dim(self) -> int:
        return self.pad_vector.size

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]


def write_feature_file(ff: FeatureFile, path) -> None:
    header = _HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, ff.feature_dim, ff.frame_count)
    body = (ff.pad_vector.astype("<f4").tobytes()
            + np.ascontiguousarray(ff.frames, dtype="<f4").tobytes())
    Path(path).write_bytes(header + body)


def load_feature_file(path) -> FeatureFile:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DataError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, dim, count = _HEADER.unpack_from(raw)
    if magic != FEATURE_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
    if version != FEATURE_VERSION:
        raise DataError(f"{path}: unsupported format version {version}")
    if dim == 0:
        raise DataError(f"{path}: feature_dim is zero")
    expected = _HEADER.size + 4 * dim * (count + 1)
    if len(raw) != expected:
        raise DataError(f"{path}: payload is {len(raw)} bytes, expected {expected}")
    values = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).astype(np.float64)
    return FeatureFile(pad_vector=values[:dim], frames=values[dim:].reshape(count, dim))


def sample_frames(frames: np.ndarray, n: int, pad_vector: np.ndarray
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Fix a k-frame sequence to exactly n rows.

    k >= n: pick rows floor(j*k/n) for j = 0..n-1 (even coverage, front
    aligned).  k < n: keep all rows and append pad_vector copies.  The
    returned mask is true at real-frame rows.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise DataError(f"cannot sample from frame array of shape {frames.shape}")
    k = frames.shape[0]
    if k >= n:
        idx = (np.arange(n) * k) // n
        return frames[idx].copy(), np.ones(n, dtype=bool)
    out = np.empty((n, frames.shape[1]))
    out[:k] = frames
    out[k:] = np.asarray(pad_vector, dtype=np.float64)
    mask = np.zeros(n, dtype=bool)
    mask[:k] = True
    return out, mask


@dataclass(frozen=True)
class AnnotationRecord:
    video_id: str
    command: tuple[str, ...]


@dataclass(frozen=True)
class AnnotationSet:
    records: tuple[AnnotationRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def video_ids(self) -> list[str]:
        return [r.video_id for r in self.records]

    def commands(self) -> list[tuple[str, ...]]:
        return [r.command for r in self.records]


def parse_annotations(text: str) -> AnnotationSet:
    """Parse `video_id<TAB>token token ...` lines.

    Blank lines and lines starting with '#' are skipped.  Tokens are
    lowercased.  Duplicate video ids, empty commands, empty tokens from
    stray spaces, and missing tabs are all errors naming the line.
    """
    records = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "\t" not in line:
            raise DataError(f"line {lineno}: expected video_id<TAB>command")
        video_id, command = line.split("\t", 1)
        video_id = video_id.strip()
        if not video_id:
            raise DataError(f"line {lineno}: empty video_id")
        if video_id in seen:
            raise DataError(
                f"line {lineno}: duplicate video_id {video_id!r} (first at line {seen[video_id]})"
            )
        seen[video_id] = lineno
        if not command.strip():
            raise DataError(f"line {lineno}: empty command")
        tokens = command.strip().lower().split(" ")
        if any(not t for t in tokens):
            raise DataError(f"line {lineno}: empty token (check for double spaces)")
        records.append(AnnotationRecord(video_id=video_id, command=tuple(tokens)))
    return AnnotationSet(records=tuple(records))


def load_annotations(path) -> AnnotationSet:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read annotations {path}: {exc}") from exc
    return parse_annotations(text)


def split(annotations: AnnotationSet, train_fraction: float, seed: int,
          group_key=None) -> tuple[AnnotationSet, AnnotationSet]:
    """Deterministic disjoint train/test split.

    Records are sorted by video_id before the seeded shuffle, so membership
    depends only on (contents, fraction, seed), never on input order.  The
    first ceil(fraction * N) shuffled records go to train.  With
    ``group_key`` (a function of the video_id), whole groups are assigned
    together until train has at least its quota.
    """
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(annotations)
    if n == 0:
        raise DataError("cannot split an empty annotation set")
    # tiny slack keeps ceil() immune to float noise in fraction * n
    quota = math.ceil(train_fraction * n - 1e-9)
    ordered = sorted(annotations.records, key=lambda r: r.video_id)
    rng = np.random.default_rng(seed)
    if group_key is None:
        perm = rng.permutation(n)
        train = [ordered[i] for i in perm[:quota]]
        test = [ordered[i] for i in perm[quota:]]
    else:
        groups: dict[str, list[AnnotationRecord]] = {}
        for rec in ordered:
            groups.setdefault(str(group_key(rec.video_id)), []).append(rec)
        keys = sorted(groups)
        train, test = [], []
        for gi in rng.permutation(len(keys)):
            bucket = groups[keys[gi]]
            (train if len(train) < quota else test).extend(bucket)
    return AnnotationSet(tuple(train)), AnnotationSet(tuple(test))


@dataclass
class Sample:
    """One training/eval item: padded features and the encoded command."""

    video_id: str
    features: np.ndarray      # (n, feature_dim)
    frame_mask: np.ndarray    # (n,) true at real frames
    command: tuple[str, ...]
    target: np.ndarray        # (n,) word indices, then EOC, then PAD
    target_mask: np.ndarray   # (n,) true at word and EOC positions


def prepare_sample(video_id: str, ff: FeatureFile, command, vocabulary: Vocabulary,
                   n: int) -> Sample:
    features, frame_mask = sample_frames(ff.frames, n, ff.pad_vector)
    target, target_mask = encode_command(vocabulary, list(command), n)
    return Sample(video_id=video_id, features=features, frame_mask=frame_mask,
                  command=tuple(command), target=target, target_mask=target_mask)
