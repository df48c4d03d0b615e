"""End-to-end training loop and the versioned checkpoint container.

Training minimizes the mean masked negative log-likelihood over each batch
with per-slot Adam states.  Sample order is reshuffled every epoch from a
seed derived as (seed, epoch), so a run is bit-reproducible given the seed
and a fixed thread count, while batch composition still varies across
epochs.

Checkpoint layout (little-endian):

    "V2CK" | u32 version | u32 header_len | header JSON | slot payloads | sha256

The header JSON carries the model config, the vocabulary, and the slot
descriptors in payload order; payloads are raw float64 bytes.  The trailing
sha256 covers every preceding byte, so any tampering is detected on load.
"""

from __future__ import annotations

import hashlib
import json
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .data import Sample
from .errors import DataError, NumericError, UsageError
from .model import ModelConfig, ModelParams, loss_and_gradients, zero_params
from .numerics import AdamState, adam_step
from .vocab import Vocabulary

CHECKPOINT_MAGIC = b"V2CK"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    lr: float = 1e-4
    batch_size: int = 16
    seed: int = 0
    shuffle: bool = True
    checkpoint_every: int = 0  # epochs between checkpoint_fn calls; 0 = never

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise UsageError("epochs and batch_size must be >= 1")
        if self.lr < 0:
            raise UsageError("lr must be >= 0")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_loss: float
    seconds: float
    samples: int


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)

    def losses(self) -> list[float]:
        return [r.mean_loss for r in self.records]

    def to_text(self) -> str:
        return "".join(
            f"epoch={r.epoch:03d} loss={r.mean_loss:.6f} seconds={r.seconds:.3f}\n"
            for r in self.records
        )


def _stack_samples(params: ModelParams, samples: Sequence[Sample]):
    cfg = params.config
    if not samples:
        raise DataError("no training samples")
    feats = np.empty((len(samples), cfg.n_steps, cfg.feature_dim))
    targets = np.empty((len(samples), cfg.n_steps), dtype=np.int64)
    masks = np.empty((len(samples), cfg.n_steps), dtype=bool)
    for i, s in enumerate(samples):
        if s.features.shape != (cfg.n_steps, cfg.feature_dim):
            raise DataError(
                f"sample {s.video_id!r}: features {s.features.shape} != "
                f"({cfg.n_steps}, {cfg.feature_dim})"
            )
        if s.target.max() >= cfg.vocab_size:
            raise DataError(f"sample {s.video_id!r}: target index outside vocabulary")
        feats[i] = s.features
        targets[i] = s.target
        masks[i] = s.target_mask
    return feats, targets, masks


def train(params: ModelParams, samples: Sequence[Sample], config: TrainConfig,
          checkpoint_fn: Callable[[int], None] | None = None) -> TrainLog:
    """Optimize ``params`` in place over ``samples``; returns the epoch log.

    Each batch: zero grads, forward/backward for the mean masked loss, one
    Adam step per slot in slot order.  A non-finite loss aborts with the
    epoch/batch coordinates.
    """
    feats, targets, masks = _stack_samples(params, samples)
    n_samples = len(samples)
    adam = {s.name: AdamState.for_slot(s, lr=config.lr) for s in params.slots}
    log = TrainLog()
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        if config.shuffle:
            order = np.random.default_rng([config.seed, epoch]).permutation(n_samples)
        else:
            order = np.arange(n_samples)
        loss_sum = 0.0
        masked_sum = 0
        for b, start in enumerate(range(0, n_samples, config.batch_size)):
            sel = order[start:start + config.batch_size]
            X = np.ascontiguousarray(feats[sel].transpose(1, 2, 0))
            tg = np.ascontiguousarray(targets[sel].T)
            mk = np.ascontiguousarray(masks[sel].T)
            mean_loss, grads = loss_and_gradients(params, X, tg, mk)
            if not np.isfinite(mean_loss):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {b}")
            params.zero_grads()
            for slot in params.slots:
                slot.grad += grads[slot.name]
                adam_step(slot, adam[slot.name])
            count = int(mk.sum())
            loss_sum += mean_loss * count
            masked_sum += count
        log.records.append(EpochRecord(
            epoch=epoch,
            mean_loss=loss_sum / masked_sum,
            seconds=time.perf_counter() - t0,
            samples=n_samples,
        ))
        if checkpoint_fn is not None and config.checkpoint_every > 0 \
                and epoch % config.checkpoint_every == 0:
            checkpoint_fn(epoch)
    return log


# ---------------------------------------------------------------------------
# checkpoint container
# ---------------------------------------------------------------------------


def save_checkpoint(params: ModelParams, vocabulary: Vocabulary, path) -> None:
    """Serialize params + vocabulary + config; byte-deterministic."""
    cfg = params.config
    header = {
        "config": {
            "cell_kind": cfg.cell_kind,
            "hidden": cfg.hidden,
            "feature_dim": cfg.feature_dim,
            "vocab_size": cfg.vocab_size,
            "n_steps": cfg.n_steps,
            "init_range": cfg.init_range,
            "seed": cfg.seed,
        },
        "vocab": list(vocabulary.tokens),
        "slots": [
            {"name": s.name, "rows": s.value.shape[0], "cols": s.value.shape[1]}
            for s in params.slots
        ],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    blob = bytearray()
    blob += CHECKPOINT_MAGIC
    blob += struct.pack("<II", CHECKPOINT_VERSION, len(header_bytes))
    blob += header_bytes
    for s in params.slots:
        blob += np.ascontiguousarray(s.value, dtype="<f8").tobytes()
    blob += hashlib.sha256(blob).digest()
    Path(path).write_bytes(bytes(blob))


def load_checkpoint(path) -> tuple[ModelParams, Vocabulary]:
    raw = Path(path).read_bytes()
    if len(raw) < 12 + 32:
        raise DataError(f"{path}: too short to be a checkpoint")
    if raw[:4] != CHECKPOINT_MAGIC:
        raise DataError(f"{path}: bad magic {raw[:4]!r}, expected {CHECKPOINT_MAGIC!r}")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise DataError(f"{path}: checksum mismatch, file is corrupt")
    version, header_len = struct.unpack_from("<II", raw, 4)
    if version != CHECKPOINT_VERSION:
        raise DataError(
            f"{path}: checkpoint version {version} not supported "
            f"(this build reads version {CHECKPOINT_VERSION})"
        )
    header = json.loads(raw[12:12 + header_len].decode("utf-8"))
    config = ModelConfig(**header["config"])
    vocabulary = Vocabulary(header["vocab"])
    if len(vocabulary) != config.vocab_size:
        raise DataError(f"{path}: vocabulary size {len(vocabulary)} != config {config.vocab_size}")
    params = zero_params(config)
    offset = 12 + header_len
    by_name = {s.name: s for s in params.slots}
    if [d["name"] for d in header["slots"]] != [s.name for s in params.slots]:
        raise DataError(f"{path}: slot layout does not match the declared config")
    for desc in header["slots"]:
        slot = by_name[desc["name"]]
        rows, cols = desc["rows"], desc["cols"]
        if slot.value.shape != (rows, cols):
            raise DataError(
                f"{path}: slot {desc['name']!r} shape ({rows}, {cols}) "
                f"!= expected {slot.value.shape}"
            )
        nbytes = rows * cols * 8
        chunk = raw[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise DataError(f"{path}: truncated payload for slot {desc['name']!r}")
        slot.value[...] = np.frombuffer(chunk, dtype="<f8").reshape(rows, cols)
        offset += nbytes
    if offset != len(body):
        raise DataError(f"{path}: {len(body) - offset} unexpected trailing bytes")
    return params, vocabulary
