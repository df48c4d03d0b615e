"""Float64 numeric substrate: activations, softmax, masked cross-entropy,
the Adam update, and finite-difference gradient verification.

All functions operate on plain ``numpy.float64`` arrays.  Matrices are
row-major 2-D arrays; column vectors have shape ``(n, 1)``.  Gradients in
this package are hand-derived, so :func:`finite_diff_check` is the canonical
way to prove any of them correct.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NumericError, UsageError

# Floor applied inside log() so a zero probability at a target index yields a
# large finite loss instead of -inf.  Well below every tested tolerance.
PROB_FLOOR = 1e-12


def sigmoid(x):
    """Logistic function 1 / (1 + e^-x), elementwise, saturation-safe.

    Evaluated via e^-|x| so neither branch can overflow.
    """
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(out) if out.ndim == 0 else out


def tanh(x):
    """Hyperbolic tangent, elementwise."""
    out = np.tanh(np.asarray(x, dtype=np.float64))
    return float(out) if out.ndim == 0 else out


def softmax(logits) -> np.ndarray:
    """Probability vector proportional to e^logits.

    Uses max-subtraction for stability.  Raises :class:`UsageError` on an
    empty or non-vector input.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.size == 0:
        raise UsageError("softmax requires a non-empty logit vector")
    if logits.ndim != 1:
        raise UsageError(f"softmax expects a 1-D vector, got shape {logits.shape}")
    e = np.exp(logits - logits.max())
    return e / e.sum()


def softmax_columns(logits: np.ndarray) -> np.ndarray:
    """Column-wise softmax of a (k, batch) logit matrix."""
    if logits.ndim != 2 or logits.shape[0] == 0:
        raise UsageError(f"softmax_columns expects a non-empty 2-D array, got shape {logits.shape}")
    e = np.exp(logits - logits.max(axis=0, keepdims=True))
    return e / e.sum(axis=0, keepdims=True)


def masked_cross_entropy(prob_rows, targets, mask) -> float:
    """Sum of -ln(p[target]) over the steps whose mask entry is true.

    ``prob_rows`` is (steps, vocab) with one probability row per step.
    Masked-out rows never influence the result, so the sum over the padded
    tail of a command is exactly the sum over its real words.
    """
    prob_rows = np.asarray(prob_rows, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    if prob_rows.ndim != 2:
        raise UsageError(f"prob_rows must be 2-D, got shape {prob_rows.shape}")
    if not (prob_rows.shape[0] == targets.shape[0] == mask.shape[0]):
        raise UsageError(
            "length mismatch: %d rows, %d targets, %d mask entries"
            % (prob_rows.shape[0], targets.shape[0], mask.shape[0])
        )
    keep = np.flatnonzero(mask)
    if keep.size == 0:
        return 0.0
    picked_targets = targets[keep]
    if picked_targets.min() < 0 or picked_targets.max() >= prob_rows.shape[1]:
        raise UsageError(
            "target index out of range [0, %d) at a masked step" % prob_rows.shape[1]
        )
    picked = prob_rows[keep, picked_targets]
    return float(-np.sum(np.log(np.maximum(picked, PROB_FLOOR))))


@dataclass
class ParamSlot:
    """A named trainable matrix together with its gradient accumulator."""

    name: str
    value: np.ndarray
    grad: np.ndarray | None = None

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.value.ndim != 2:
            raise UsageError(f"slot {self.name!r}: value must be 2-D, got shape {self.value.shape}")
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        else:
            self.grad = np.asarray(self.grad, dtype=np.float64)
            if self.grad.shape != self.value.shape:
                raise UsageError(
                    f"slot {self.name!r}: grad shape {self.grad.shape} != value shape {self.value.shape}"
                )

    def zero_grad(self):
        self.grad[...] = 0.0


@dataclass
class AdamState:
    """First/second moment estimates and hyperparameters for one slot.

    Defaults follow the optimizer's canonical constants; only the learning
    rate is routinely overridden.
    """

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_slot(cls, slot: ParamSlot, lr: float = 1e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(m=np.zeros_like(slot.value), v=np.zeros_like(slot.value),
                   t=0, lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(slot: ParamSlot, state: AdamState) -> None:
    """One bias-corrected Adam update of ``slot.value`` from ``slot.grad``.

    Mutates both arguments in place:

        t <- t + 1
        m <- b1*m + (1-b1)*g          v <- b2*v + (1-b2)*g^2
        value <- value - lr * m_hat / (sqrt(v_hat) + eps)

    with m_hat = m/(1-b1^t) and v_hat = v/(1-b2^t).
    """
    g = slot.grad
    if g.shape != state.m.shape:
        raise UsageError(
            f"slot {slot.name!r}: grad shape {g.shape} != adam state shape {state.m.shape}"
        )
    state.t += 1
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * g
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * (g * g)
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    slot.value -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    if not np.isfinite(slot.value).all():
        raise NumericError(f"slot {slot.name!r}: non-finite value after adam step {state.t}")


def finite_diff_check(loss_fn: Callable[[], float], slots: Sequence[ParamSlot],
                      epsilon: float = 1e-5) -> float:
    """Max relative error between analytic gradients and central differences.

    ``loss_fn`` must be a deterministic zero-argument callable that evaluates
    the loss at the slots' *current* values.  Each ``slot.grad`` must already
    hold the analytic gradient of that loss.  Every entry of every slot is
    perturbed by +/- epsilon in turn; the relative error uses the denominator
    max(|analytic|, |numeric|, 1e-8).
    """
    if not (1e-7 <= epsilon <= 1e-3):
        raise UsageError(f"epsilon {epsilon} outside [1e-7, 1e-3]")
    worst = 0.0
    for slot in slots:
        flat_value = slot.value.reshape(-1)
        flat_grad = slot.grad.reshape(-1)
        for i in range(flat_value.size):
            saved = flat_value[i]
            flat_value[i] = saved + epsilon
            f_plus = loss_fn()
            flat_value[i] = saved - epsilon
            f_minus = loss_fn()
            flat_value[i] = saved
            numeric = (f_plus - f_minus) / (2.0 * epsilon)
            analytic = flat_grad[i]
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
            if rel > worst:
                worst = rel
    return worst
