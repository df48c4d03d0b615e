"""Two-layer encoder-decoder over frame features.

The first recurrent layer (encoder) consumes one feature vector per step.
At each aligned step t the decoder consumes the concatenation of the
encoder's hidden state h_e[t] with the one-hot of the previous word
(teacher-forced during training, argmax feedback at inference; the word
before step 0 is PAD).  A linear layer projects each decoder hidden state
to vocabulary logits, and the softmax of those logits is the per-step word
distribution.

The training loss is the summed negative log-likelihood over the real-word
positions (command words plus the terminating EOC); padded positions are
excluded by the mask.  All parameters, including the learned initial states
h0/c0 of both layers, live in named :class:`~v2c.numerics.ParamSlot` objects
so the optimizer and the gradient checker can walk them uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .cells import CellState, GruParams, LstmParams, gru_step, lstm_step
from .errors import UsageError
from .numerics import PROB_FLOOR, ParamSlot, masked_cross_entropy, softmax_columns
from .vocab import EOC_INDEX, PAD_INDEX

CELL_KINDS = ("lstm", "gru")


@dataclass(frozen=True)
class ModelConfig:
    cell_kind: str
    hidden: int
    feature_dim: int
    vocab_size: int
    n_steps: int = 30
    init_range: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.cell_kind not in CELL_KINDS:
            raise UsageError(f"cell_kind must be one of {CELL_KINDS}, got {self.cell_kind!r}")
        for name in ("hidden", "feature_dim", "vocab_size", "n_steps"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be >= 1")
        if self.vocab_size < 2:
            raise UsageError("vocab_size must cover at least PAD and EOC")
        if self.init_range <= 0:
            raise UsageError("init_range must be positive")

    @property
    def decoder_input_dim(self) -> int:
        return self.hidden + self.vocab_size


@dataclass
class ModelParams:
    """All trainable state: encoder cell, decoder cell, output projection,
    and learned initial states.  ``slots`` is the authoritative ordered list;
    the typed fields are views of the same arrays."""

    config: ModelConfig
    encoder: LstmParams | GruParams
    decoder: LstmParams | GruParams
    W_z: np.ndarray
    b_z: np.ndarray
    enc_h0: np.ndarray
    dec_h0: np.ndarray
    enc_c0: np.ndarray | None = None
    dec_c0: np.ndarray | None = None
    slots: list[ParamSlot] = field(default_factory=list)

    def slot(self, name: str) -> ParamSlot:
        for s in self.slots:
            if s.name == name:
                return s
        raise UsageError(f"no slot named {name!r}")

    def zero_grads(self):
        for s in self.slots:
            s.zero_grad()

    def entry_count(self) -> int:
        return sum(s.value.size for s in self.slots)


def _cell_class(kind: str):
    return LstmParams if kind == "lstm" else GruParams


def _build_params(config: ModelConfig, draw) -> ModelParams:
    """Assemble slots in a fixed, documented order.

    Draw order per cell: W_x gates, W_h gates (gate order i,f,o,g for LSTM,
    r,z,h for GRU), then h0 (and c0 for LSTM).  Encoder first, then decoder,
    then the output projection W_z.  Biases and b_z start at zero.
    """
    cls = _cell_class(config.cell_kind)
    gates = ("i", "f", "o", "g") if config.cell_kind == "lstm" else ("r", "z", "h")
    slots: list[ParamSlot] = []

    def add(name, value):
        slots.append(ParamSlot(name=name, value=value))
        return slots[-1].value

    pieces = {}
    for prefix, input_dim in (("enc", config.feature_dim), ("dec", config.decoder_input_dim)):
        fields = {}
        for g in gates:
            fields[f"W_x{g}"] = add(f"{prefix}.W_x{g}", draw((config.hidden, input_dim)))
        for g in gates:
            fields[f"W_h{g}"] = add(f"{prefix}.W_h{g}", draw((config.hidden, config.hidden)))
        for g in gates:
            fields[f"b_{g}"] = add(f"{prefix}.b_{g}", np.zeros((config.hidden, 1)))
        pieces[prefix] = cls(**fields)
        pieces[f"{prefix}_h0"] = add(f"{prefix}.h0", draw((config.hidden, 1)))
        if config.cell_kind == "lstm":
            pieces[f"{prefix}_c0"] = add(f"{prefix}.c0", draw((config.hidden, 1)))
    W_z = add("out.W_z", draw((config.vocab_size, config.hidden)))
    b_z = add("out.b_z", np.zeros((config.vocab_size, 1)))
    return ModelParams(
        config=config,
        encoder=pieces["enc"],
        decoder=pieces["dec"],
        W_z=W_z,
        b_z=b_z,
        enc_h0=pieces["enc_h0"],
        dec_h0=pieces["dec_h0"],
        enc_c0=pieces.get("enc_c0"),
        dec_c0=pieces.get("dec_c0"),
        slots=slots,
    )


def init_params(config: ModelConfig) -> ModelParams:
    """Seeded initialization: weights and initial states uniform in
    [-init_range, init_range], biases zero.  Bit-reproducible per seed."""
    rng = np.random.default_rng(config.seed)
    r = config.init_range
    return _build_params(config, lambda shape: rng.uniform(-r, r, size=shape))


def zero_params(config: ModelConfig) -> ModelParams:
    """All-zero parameters (useful for closed-form checks)."""
    return _build_params(config, lambda shape: np.zeros(shape))


def _tile(col: np.ndarray, batch: int) -> np.ndarray:
    return np.ascontiguousarray(np.broadcast_to(col, (col.shape[0], batch)))


def _encode_cached(params: ModelParams, X: np.ndarray):
    """Run the encoder over X (steps, feature_dim, batch); returns the
    sequence cache (H[0] is the learned initial state)."""
    B = X.shape[2]
    h0 = _tile(params.enc_h0, B)
    if params.config.cell_kind == "lstm":
        return kernels.lstm_sequence(params.encoder, X, h0, _tile(params.enc_c0, B))
    return kernels.gru_sequence(params.encoder, X, h0)


def encode(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Hidden-state sequence of the encoder, one vector per input frame.

    ``features`` is (steps, feature_dim) for a single sequence or
    (steps, feature_dim, batch); the result matches ((steps, hidden) or
    (steps, hidden, batch)).  All steps are returned; nothing is pooled.
    """
    features = np.asarray(features, dtype=np.float64)
    single = features.ndim == 2
    X = features[:, :, None] if single else features
    if X.ndim != 3 or X.shape[1] != params.config.feature_dim:
        raise UsageError(
            f"encode: features shape {features.shape} incompatible with "
            f"feature_dim={params.config.feature_dim}"
        )
    H = _encode_cached(params, X).H[1:]
    return H[:, :, 0] if single else H


def _teacher_inputs(targets: np.ndarray) -> np.ndarray:
    """Previous-word indices under teacher forcing; step 0 sees PAD."""
    prev = np.empty_like(targets)
    prev[0] = PAD_INDEX
    prev[1:] = targets[:-1]
    return prev


def _decoder_inputs(params: ModelParams, H_e: np.ndarray, prev_tokens: np.ndarray) -> np.ndarray:
    T, hidden, B = H_e.shape
    V = params.config.vocab_size
    X_d = np.zeros((T, hidden + V, B))
    X_d[:, :hidden, :] = H_e
    cols = np.arange(B)
    for t in range(T):
        X_d[t, hidden + prev_tokens[t], cols] = 1.0
    return X_d


def _decode_cached(params: ModelParams, X_d: np.ndarray):
    B = X_d.shape[2]
    h0 = _tile(params.dec_h0, B)
    if params.config.cell_kind == "lstm":
        return kernels.lstm_sequence(params.decoder, X_d, h0, _tile(params.dec_c0, B))
    return kernels.gru_sequence(params.decoder, X_d, h0)


def _project_logits(params: ModelParams, H_d: np.ndarray) -> np.ndarray:
    """Per-step logits W_z h + b_z for H_d of shape (steps, hidden, batch)."""
    T, _, B = H_d.shape
    logits = np.empty((T, params.config.vocab_size, B))
    for t in range(T):
        logits[t] = params.W_z @ H_d[t] + params.b_z
    return logits


def _validate_target(params: ModelParams, target: np.ndarray, mask: np.ndarray):
    n = params.config.n_steps
    if target.shape != (n,) or mask.shape != (n,):
        raise UsageError(
            f"target/mask must have length n_steps={n}, got {target.shape}/{mask.shape}"
        )
    if target.min() < 0 or target.max() >= params.config.vocab_size:
        raise UsageError("target index outside the vocabulary")


def decode_train(params: ModelParams, H_e: np.ndarray, target: np.ndarray,
                 mask: np.ndarray) -> tuple[np.ndarray, float]:
    """Teacher-forced decode of one sequence.

    ``H_e`` is (n_steps, hidden), ``target`` the padded word indices,
    ``mask`` true at real-word and EOC positions.  Returns per-step logits
    (n_steps, vocab) and the summed masked cross-entropy.
    """
    H_e = np.asarray(H_e, dtype=np.float64)
    target = np.asarray(target, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    n = params.config.n_steps
    if H_e.shape != (n, params.config.hidden):
        raise UsageError(f"H_e shape {H_e.shape} != ({n}, {params.config.hidden})")
    _validate_target(params, target, mask)
    X_d = _decoder_inputs(params, H_e[:, :, None], _teacher_inputs(target)[:, None])
    H_d = _decode_cached(params, X_d).H[1:]
    logits = _project_logits(params, H_d)[:, :, 0]
    probs = np.empty_like(logits)
    for t in range(n):
        probs[t] = softmax_columns(logits[t][:, None])[:, 0]
    loss = masked_cross_entropy(probs, target, mask)
    return logits, loss


def sequence_log_prob(params: ModelParams, H_e: np.ndarray, command: np.ndarray) -> float:
    """Log-likelihood of a command (word indices, EOC excluded) given the
    encoded features: the sum over the command's words and its terminating
    EOC of ln P(word | previous words, features).  Equals the negative
    :func:`decode_train` loss for the same command."""
    command = np.asarray(command, dtype=np.int64)
    n = params.config.n_steps
    if command.ndim != 1 or command.size > n - 1:
        raise UsageError(f"command length {command.size} exceeds n_steps-1 = {n - 1}")
    target = np.full(n, PAD_INDEX, dtype=np.int64)
    target[: command.size] = command
    target[command.size] = EOC_INDEX
    mask = np.zeros(n, dtype=bool)
    mask[: command.size + 1] = True
    _, loss = decode_train(params, H_e, target, mask)
    return -loss


@dataclass
class DecodeResult:
    """Greedy decode output: emitted token indices (EOC-terminated unless
    length-capped), the per-step distributions, and the decode log-prob."""

    tokens: list[int]
    distributions: list[np.ndarray]
    log_prob: float

    def words(self, vocabulary) -> list[str]:
        out = []
        for idx in self.tokens:
            if idx == EOC_INDEX:
                break
            out.append(vocabulary.token(idx))
        return out


def decode_greedy(params: ModelParams, H_e: np.ndarray) -> DecodeResult:
    """Argmax-feedback decoding: step 0 is conditioned on PAD, later steps on
    the previously emitted word; stops after emitting EOC or after n_steps.
    Ties pick the lowest index."""
    H_e = np.asarray(H_e, dtype=np.float64)
    n, hidden = params.config.n_steps, params.config.hidden
    if H_e.shape != (n, hidden):
        raise UsageError(f"H_e shape {H_e.shape} != ({n}, {hidden})")
    V = params.config.vocab_size
    step = lstm_step if params.config.cell_kind == "lstm" else gru_step
    state = CellState(
        h=params.dec_h0.copy(),
        c=params.dec_c0.copy() if params.dec_c0 is not None else np.zeros((hidden, 1)),
    )
    prev = PAD_INDEX
    tokens: list[int] = []
    dists: list[np.ndarray] = []
    log_prob = 0.0
    for t in range(n):
        x = np.zeros((hidden + V, 1))
        x[:hidden, 0] = H_e[t]
        x[hidden + prev, 0] = 1.0
        state, _ = step(params.decoder, x, state)
        logits = params.W_z @ state.h + params.b_z
        p = softmax_columns(logits)[:, 0]
        choice = int(np.argmax(p))
        tokens.append(choice)
        dists.append(p)
        log_prob += float(np.log(max(p[choice], PROB_FLOOR)))
        if choice == EOC_INDEX:
            break
        prev = choice
    return DecodeResult(tokens=tokens, distributions=dists, log_prob=log_prob)


def batch_loss(params: ModelParams, X: np.ndarray, targets: np.ndarray,
               masks: np.ndarray) -> float:
    """Mean masked cross-entropy over a batch (forward only).

    ``X`` is (n_steps, feature_dim, batch); ``targets``/``masks`` are
    (n_steps, batch).  The mean is over masked word positions in the batch.
    """
    loss_sum, count, _, _, _, _ = _batch_forward(params, X, targets, masks)
    return loss_sum / count


def _batch_forward(params: ModelParams, X, targets, masks):
    n = params.config.n_steps
    if X.ndim != 3 or X.shape[0] != n or X.shape[1] != params.config.feature_dim:
        raise UsageError(
            f"X shape {X.shape} != ({n}, {params.config.feature_dim}, batch)"
        )
    if targets.shape != (n, X.shape[2]) or masks.shape != (n, X.shape[2]):
        raise UsageError("targets/masks must be (n_steps, batch)")
    if not masks.any():
        raise UsageError("batch has no masked positions to score")
    enc_cache = _encode_cached(params, X)
    X_d = _decoder_inputs(params, enc_cache.H[1:], _teacher_inputs(targets))
    dec_cache = _decode_cached(params, X_d)
    logits = _project_logits(params, dec_cache.H[1:])
    B = X.shape[2]
    cols = np.arange(B)
    probs = np.empty_like(logits)
    loss_sum = 0.0
    for t in range(n):
        probs[t] = softmax_columns(logits[t])
        picked = probs[t][targets[t], cols]
        terms = -np.log(np.maximum(picked, PROB_FLOOR))
        loss_sum += float(terms[masks[t]].sum())
    return loss_sum, int(masks.sum()), enc_cache, dec_cache, X_d, probs


def loss_and_gradients(params: ModelParams, X: np.ndarray, targets: np.ndarray,
                       masks: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Mean masked loss over a batch and its gradient w.r.t. every slot.

    Returns ``(mean_loss, grads)`` with ``grads`` keyed by slot name.  The
    gradient of the probability floor is intentionally ignored: the floor
    only guards the reported loss value against -inf.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    masks = np.asarray(masks, dtype=bool)
    loss_sum, count, enc_cache, dec_cache, X_d, probs = _batch_forward(params, X, targets, masks)
    scale = 1.0 / count
    n, hidden = params.config.n_steps, params.config.hidden
    B = X.shape[2]
    cols = np.arange(B)

    dW_z = np.zeros_like(params.W_z)
    db_z = np.zeros_like(params.b_z)
    dH_d = np.empty((n, hidden, B))
    H_d = dec_cache.H[1:]
    for t in range(n):
        w = masks[t] * scale
        dl = probs[t] * w[None, :]
        dl[targets[t], cols] -= w
        dW_z += dl @ H_d[t].T
        db_z += dl.sum(axis=1, keepdims=True)
        dH_d[t] = params.W_z.T @ dl

    grads: dict[str, np.ndarray] = {"out.W_z": dW_z, "out.b_z": db_z}
    if params.config.cell_kind == "lstm":
        dec_grads, dX_d, d_dec_h0, d_dec_c0 = kernels.lstm_sequence_backward(
            params.decoder, X_d, dec_cache, dH_d)
    else:
        dec_grads, dX_d, d_dec_h0 = kernels.gru_sequence_backward(
            params.decoder, X_d, dec_cache, dH_d)
        d_dec_c0 = None
    for k, v in dec_grads.items():
        grads[f"dec.{k}"] = v
    grads["dec.h0"] = d_dec_h0.sum(axis=1, keepdims=True)
    if d_dec_c0 is not None:
        grads["dec.c0"] = d_dec_c0.sum(axis=1, keepdims=True)

    dH_e = np.ascontiguousarray(dX_d[:, :hidden, :])
    if params.config.cell_kind == "lstm":
        enc_grads, _, d_enc_h0, d_enc_c0 = kernels.lstm_sequence_backward(
            params.encoder, X, enc_cache, dH_e)
    else:
        enc_grads, _, d_enc_h0 = kernels.gru_sequence_backward(
            params.encoder, X, enc_cache, dH_e)
        d_enc_c0 = None
    for k, v in enc_grads.items():
        grads[f"enc.{k}"] = v
    grads["enc.h0"] = d_enc_h0.sum(axis=1, keepdims=True)
    if d_enc_c0 is not None:
        grads["enc.c0"] = d_enc_c0.sum(axis=1, keepdims=True)
    return loss_sum * scale, grads
