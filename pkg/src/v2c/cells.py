"""Single-step LSTM and GRU cells with hand-derived backward passes.

Both cells follow the standard formulations.  LSTM:

    i = sigmoid(W_xi x + W_hi h_prev + b_i)
    f = sigmoid(W_xf x + W_hf h_prev + b_f)
    o = sigmoid(W_xo x + W_ho h_prev + b_o)
    g = tanh   (W_xg x + W_hg h_prev + b_g)
    c = f * c_prev + i * g
    h = o * tanh(c)

GRU, with the reset gate applied to the recurrent term before the
nonlinearity:

    r = sigmoid(W_xr x + W_hr h_prev + b_r)
    z = sigmoid(W_xz x + W_hz h_prev + b_z)
    h~ = tanh(W_xh x + W_hh (r * h_prev) + b_h)
    h = z * h_prev + (1 - z) * h~

Inputs and states are column-stacked: ``x`` is (input_dim, batch) and states
are (hidden, batch).  Weights are stored one matrix per gate so each line
above is directly inspectable and testable.  Each step returns the cache its
backward pass needs; caches are single-owner.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .numerics import sigmoid

LSTM_GATES = ("i", "f", "o", "g")
GRU_GATES = ("r", "z", "h")


def _as_matrix(name, a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise UsageError(f"{name} must be 2-D, got shape {a.shape}")
    return a


@dataclass
class LstmParams:
    """Per-gate LSTM weights: W_x* (hidden, input), W_h* (hidden, hidden),
    b_* (hidden, 1)."""

    W_xi: np.ndarray
    W_xf: np.ndarray
    W_xo: np.ndarray
    W_xg: np.ndarray
    W_hi: np.ndarray
    W_hf: np.ndarray
    W_ho: np.ndarray
    W_hg: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_g: np.ndarray

    @classmethod
    def zeros(cls, hidden: int, input_dim: int) -> "LstmParams":
        wx = lambda: np.zeros((hidden, input_dim))
        wh = lambda: np.zeros((hidden, hidden))
        b = lambda: np.zeros((hidden, 1))
        return cls(wx(), wx(), wx(), wx(), wh(), wh(), wh(), wh(), b(), b(), b(), b())

    @property
    def hidden_size(self) -> int:
        return self.W_xi.shape[0]

    @property
    def input_size(self) -> int:
        return self.W_xi.shape[1]

    def named(self) -> dict[str, np.ndarray]:
        return {
            "W_xi": self.W_xi, "W_xf": self.W_xf, "W_xo": self.W_xo, "W_xg": self.W_xg,
            "W_hi": self.W_hi, "W_hf": self.W_hf, "W_ho": self.W_ho, "W_hg": self.W_hg,
            "b_i": self.b_i, "b_f": self.b_f, "b_o": self.b_o, "b_g": self.b_g,
        }

    def validate(self):
        h, d = self.W_xi.shape
        for g in LSTM_GATES:
            wx = _as_matrix(f"W_x{g}", getattr(self, f"W_x{g}"))
            wh = _as_matrix(f"W_h{g}", getattr(self, f"W_h{g}"))
            b = _as_matrix(f"b_{g}", getattr(self, f"b_{g}"))
            if wx.shape != (h, d) or wh.shape != (h, h) or b.shape != (h, 1):
                raise UsageError(
                    f"lstm gate {g}: shapes {wx.shape}/{wh.shape}/{b.shape} "
                    f"inconsistent with hidden={h}, input={d}"
                )


@dataclass
class GruParams:
    """Per-gate GRU weights: W_x* (hidden, input), W_h* (hidden, hidden),
    b_* (hidden, 1)."""

    W_xr: np.ndarray
    W_xz: np.ndarray
    W_xh: np.ndarray
    W_hr: np.ndarray
    W_hz: np.ndarray
    W_hh: np.ndarray
    b_r: np.ndarray
    b_z: np.ndarray
    b_h: np.ndarray

    @classmethod
    def zeros(cls, hidden: int, input_dim: int) -> "GruParams":
        wx = lambda: np.zeros((hidden, input_dim))
        wh = lambda: np.zeros((hidden, hidden))
        b = lambda: np.zeros((hidden, 1))
        return cls(wx(), wx(), wx(), wh(), wh(), wh(), b(), b(), b())

    @property
    def hidden_size(self) -> int:
        return self.W_xr.shape[0]

    @property
    def input_size(self) -> int:
        return self.W_xr.shape[1]

    def named(self) -> dict[str, np.ndarray]:
        return {
            "W_xr": self.W_xr, "W_xz": self.W_xz, "W_xh": self.W_xh,
            "W_hr": self.W_hr, "W_hz": self.W_hz, "W_hh": self.W_hh,
            "b_r": self.b_r, "b_z": self.b_z, "b_h": self.b_h,
        }

    def validate(self):
        h, d = self.W_xr.shape
        for g in GRU_GATES:
            wx = _as_matrix(f"W_x{g}", getattr(self, f"W_x{g}"))
            wh = _as_matrix(f"W_h{g}", getattr(self, f"W_h{g}"))
            b = _as_matrix(f"b_{g}", getattr(self, f"b_{g}"))
            if wx.shape != (h, d) or wh.shape != (h, h) or b.shape != (h, 1):
                raise UsageError(
                    f"gru gate {g}: shapes {wx.shape}/{wh.shape}/{b.shape} "
                    f"inconsistent with hidden={h}, input={d}"
                )


@dataclass
class CellState:
    """Recurrent state: hidden vector h and memory cell c, column-stacked.

    GRU uses only h; its c stays zero and is carried for interface parity.
    """

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden: int, batch: int = 1) -> "CellState":
        return cls(np.zeros((hidden, batch)), np.zeros((hidden, batch)))


@dataclass
class LstmStepCache:
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray
    c: np.ndarray


@dataclass
class GruStepCache:
    x: np.ndarray
    h_prev: np.ndarray
    r: np.ndarray
    z: np.ndarray
    h_tilde: np.ndarray


def _check_step_shapes(kind, params, x, prev):
    h, d = params.hidden_size, params.input_size
    if x.ndim != 2 or x.shape[0] != d:
        raise UsageError(f"{kind} step: input shape {x.shape} incompatible with input_dim={d}")
    if prev.h.shape != (h, x.shape[1]) or prev.c.shape != (h, x.shape[1]):
        raise UsageError(
            f"{kind} step: state shapes {prev.h.shape}/{prev.c.shape} "
            f"incompatible with hidden={h}, batch={x.shape[1]}"
        )


def lstm_step(params: LstmParams, x: np.ndarray, prev: CellState) -> tuple[CellState, LstmStepCache]:
    """One LSTM step; returns the new state and the cache for the adjoint."""
    x = np.asarray(x, dtype=np.float64)
    _check_step_shapes("lstm", params, x, prev)
    i = sigmoid(params.W_xi @ x + params.W_hi @ prev.h + params.b_i)
    f = sigmoid(params.W_xf @ x + params.W_hf @ prev.h + params.b_f)
    o = sigmoid(params.W_xo @ x + params.W_ho @ prev.h + params.b_o)
    g = np.tanh(params.W_xg @ x + params.W_hg @ prev.h + params.b_g)
    c = f * prev.c + i * g
    h = o * np.tanh(c)
    cache = LstmStepCache(x=x, h_prev=prev.h, c_prev=prev.c, i=i, f=f, o=o, g=g, c=c)
    return CellState(h=h, c=c), cache


def gru_step(params: GruParams, x: np.ndarray, prev: CellState) -> tuple[CellState, GruStepCache]:
    """One GRU step; returns the new state and the cache for the adjoint."""
    x = np.asarray(x, dtype=np.float64)
    _check_step_shapes("gru", params, x, prev)
    r = sigmoid(params.W_xr @ x + params.W_hr @ prev.h + params.b_r)
    z = sigmoid(params.W_xz @ x + params.W_hz @ prev.h + params.b_z)
    h_tilde = np.tanh(params.W_xh @ x + params.W_hh @ (r * prev.h) + params.b_h)
    h = z * prev.h + (1.0 - z) * h_tilde
    cache = GruStepCache(x=x, h_prev=prev.h, r=r, z=z, h_tilde=h_tilde)
    return CellState(h=h, c=np.zeros_like(h)), cache


def lstm_step_backward(params: LstmParams, cache: LstmStepCache, dh: np.ndarray,
                       dc: np.ndarray | None = None):
    """Adjoint of :func:`lstm_step`.

    ``dh``/``dc`` are the upstream gradients w.r.t. the step's output h and c.
    Returns ``(param_grads, dx, dh_prev, dc_prev)`` where ``param_grads`` is
    keyed like :meth:`LstmParams.named`.
    """
    dh = np.asarray(dh, dtype=np.float64)
    if dh.shape != cache.i.shape:
        raise UsageError(f"lstm backward: dh shape {dh.shape} != {cache.i.shape}")
    if dc is None:
        dc = np.zeros_like(dh)
    tc = np.tanh(cache.c)
    do = dh * tc
    dct = dc + dh * cache.o * (1.0 - tc * tc)
    di = dct * cache.g
    df = dct * cache.c_prev
    dg = dct * cache.i
    dc_prev = dct * cache.f
    da_i = di * cache.i * (1.0 - cache.i)
    da_f = df * cache.f * (1.0 - cache.f)
    da_o = do * cache.o * (1.0 - cache.o)
    da_g = dg * (1.0 - cache.g * cache.g)
    grads = {
        "W_xi": da_i @ cache.x.T, "W_xf": da_f @ cache.x.T,
        "W_xo": da_o @ cache.x.T, "W_xg": da_g @ cache.x.T,
        "W_hi": da_i @ cache.h_prev.T, "W_hf": da_f @ cache.h_prev.T,
        "W_ho": da_o @ cache.h_prev.T, "W_hg": da_g @ cache.h_prev.T,
        "b_i": da_i.sum(axis=1, keepdims=True), "b_f": da_f.sum(axis=1, keepdims=True),
        "b_o": da_o.sum(axis=1, keepdims=True), "b_g": da_g.sum(axis=1, keepdims=True),
    }
    dx = params.W_xi.T @ da_i + params.W_xf.T @ da_f + params.W_xo.T @ da_o + params.W_xg.T @ da_g
    dh_prev = (params.W_hi.T @ da_i + params.W_hf.T @ da_f
               + params.W_ho.T @ da_o + params.W_hg.T @ da_g)
    return grads, dx, dh_prev, dc_prev


def gru_step_backward(params: GruParams, cache: GruStepCache, dh: np.ndarray):
    """Adjoint of :func:`gru_step`; returns ``(param_grads, dx, dh_prev)``."""
    dh = np.asarray(dh, dtype=np.float64)
    if dh.shape != cache.r.shape:
        raise UsageError(f"gru backward: dh shape {dh.shape} != {cache.r.shape}")
    dz = dh * (cache.h_prev - cache.h_tilde)
    dh_tilde = dh * (1.0 - cache.z)
    dh_prev = dh * cache.z
    da_h = dh_tilde * (1.0 - cache.h_tilde * cache.h_tilde)
    d_rh = params.W_hh.T @ da_h
    dr = d_rh * cache.h_prev
    dh_prev = dh_prev + d_rh * cache.r
    da_r = dr * cache.r * (1.0 - cache.r)
    da_z = dz * cache.z * (1.0 - cache.z)
    grads = {
        "W_xr": da_r @ cache.x.T, "W_xz": da_z @ cache.x.T, "W_xh": da_h @ cache.x.T,
        "W_hr": da_r @ cache.h_prev.T, "W_hz": da_z @ cache.h_prev.T,
        "W_hh": da_h @ (cache.r * cache.h_prev).T,
        "b_r": da_r.sum(axis=1, keepdims=True), "b_z": da_z.sum(axis=1, keepdims=True),
        "b_h": da_h.sum(axis=1, keepdims=True),
    }
    dx = params.W_xr.T @ da_r + params.W_xz.T @ da_z + params.W_xh.T @ da_h
    dh_prev = dh_prev + params.W_hr.T @ da_r + params.W_hz.T @ da_z
    return grads, dx, dh_prev


def cell_backward(params, cache, dh, dc=None):
    """Dispatch to the adjoint matching the forward cache type.

    For LSTM caches returns ``(param_grads, dx, dh_prev, dc_prev)``; for GRU
    caches returns ``(param_grads, dx, dh_prev)``.
    """
    if isinstance(cache, LstmStepCache):
        if not isinstance(params, LstmParams):
            raise UsageError("lstm cache paired with non-lstm params")
        return lstm_step_backward(params, cache, dh, dc)
    if isinstance(cache, GruStepCache):
        if not isinstance(params, GruParams):
            raise UsageError("gru cache paired with non-gru params")
        if dc is not None and np.any(dc):
            raise UsageError("gru has no memory cell; dc must be zero or omitted")
        return gru_step_backward(params, cache, dh)
    raise UsageError(f"unknown cache type {type(cache).__name__}")
