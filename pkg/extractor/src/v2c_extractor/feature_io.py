"""Writer for the binary per-video feature container consumed by the
translation engine.

Layout (little-endian): magic "V2CF", u32 version (1), u32 feature_dim,
u32 frame_count, feature_dim float32 pad-vector values, then
frame_count x feature_dim float32 frame features.  This is implemented
independently here; the engine's loader is the validating counterpart.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DataError

MAGIC = b"V2CF"
VERSION = 1


def write_feature_file(pad_vector: np.ndarray, frames: np.ndarray, path) -> None:
    pad_vector = np.asarray(pad_vector, dtype=np.float32)
    frames = np.asarray(frames, dtype=np.float32)
    if pad_vector.ndim != 1 or pad_vector.size == 0:
        raise DataError(f"pad vector must be a non-empty vector, got {pad_vector.shape}")
    if frames.ndim != 2 or frames.shape[1] != pad_vector.size:
        raise DataError(f"frames {frames.shape} inconsistent with dim {pad_vector.size}")
    if not (np.isfinite(pad_vector).all() and np.isfinite(frames).all()):
        raise DataError("feature values must be finite")
    blob = struct.pack("<4sIII", MAGIC, VERSION, pad_vector.size, frames.shape[0])
    blob += pad_vector.astype("<f4").tobytes()
    blob += np.ascontiguousarray(frames, dtype="<f4").tobytes()
    target = Path(path)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_bytes(blob)  # atomic publish: readers never see partial files
    tmp.replace(target)
