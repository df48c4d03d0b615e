"""Whole-sequence recurrence kernels with two interchangeable backends.

The per-step cell math in :mod:`v2c.cells` is the readable reference; the
functions here unroll it over a full sequence, which is the hot loop of
training and inference.  Two implementations exist:

* ``numba``: ``@njit``-compiled loops (default when numba imports).
* ``numpy``: plain-Python loops over the :mod:`v2c.cells` step functions.

Select with the ``V2C_BACKEND`` environment variable (``auto``/``numba``/
``numpy``) or :func:`set_backend`.  Both backends implement identical
algebra; results agree to float64 rounding (the libm calls may differ in the
last ulp, so cross-backend equality is near-exact, not bitwise).  Within one
backend results are bit-reproducible.

Sequence arrays are time-major: inputs ``X`` are (steps, input_dim, batch),
state trajectories ``H``/``C`` are (steps + 1, hidden, batch) with the
initial state at index 0.
"""

from __future__ import annotations

import os
from typing import NamedTuple

import numpy as np

from . import cells
from .cells import CellState, GruParams, LstmParams
from .errors import UsageError

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only on numba-less installs
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if len(args) == 1 and callable(args[0]):
            return args[0]
        return wrap


_BACKEND: str | None = None


def _resolve(requested: str) -> str:
    if requested == "auto":
        return "numba" if NUMBA_AVAILABLE else "numpy"
    if requested == "numba":
        if not NUMBA_AVAILABLE:
            raise UsageError("V2C_BACKEND=numba requested but numba is not importable")
        return "numba"
    if requested == "numpy":
        return "numpy"
    raise UsageError(f"unknown backend {requested!r}; expected auto, numba, or numpy")


def get_backend() -> str:
    """Active backend name, resolved once from V2C_BACKEND."""
    global _BACKEND
    if _BACKEND is None:
        _BACKEND = _resolve(os.environ.get("V2C_BACKEND", "auto"))
    return _BACKEND


def set_backend(name: str) -> str:
    """Force a backend (``auto`` re-resolves); returns the active name."""
    global _BACKEND
    _BACKEND = _resolve(name)
    return _BACKEND


class LstmSeqCache(NamedTuple):
    H: np.ndarray  # (T+1, hidden, batch), H[0] = h0
    C: np.ndarray  # (T+1, hidden, batch), C[0] = c0
    I: np.ndarray
    F: np.ndarray
    O: np.ndarray
    G: np.ndarray


class GruSeqCache(NamedTuple):
    H: np.ndarray  # (T+1, hidden, batch), H[0] = h0
    R: np.ndarray
    Z: np.ndarray
    HT: np.ndarray  # candidate state h~ per step


def _check_seq_args(kind, params, X, h0):
    if X.ndim != 3:
        raise UsageError(f"{kind} sequence: X must be (steps, input_dim, batch), got {X.shape}")
    if X.shape[0] < 1:
        raise UsageError(f"{kind} sequence: need at least one step")
    if X.shape[1] != params.input_size:
        raise UsageError(
            f"{kind} sequence: input_dim {X.shape[1]} != params input_dim {params.input_size}"
        )
    if h0.shape != (params.hidden_size, X.shape[2]):
        raise UsageError(
            f"{kind} sequence: h0 shape {h0.shape} != ({params.hidden_size}, {X.shape[2]})"
        )


# ---------------------------------------------------------------------------
# numpy fallback: sequence = fold of the verified per-step functions
# ---------------------------------------------------------------------------


def _lstm_seq_forward_np(p: LstmParams, X, h0, c0) -> LstmSeqCache:
    T, _, B = X.shape
    hd = p.hidden_size
    H = np.empty((T + 1, hd, B))
    C = np.empty((T + 1, hd, B))
    I = np.empty((T, hd, B))
    F = np.empty((T, hd, B))
    O = np.empty((T, hd, B))
    G = np.empty((T, hd, B))
    H[0], C[0] = h0, c0
    state = CellState(h=h0, c=c0)
    for t in range(T):
        state, cache = cells.lstm_step(p, X[t], state)
        I[t], F[t], O[t], G[t] = cache.i, cache.f, cache.o, cache.g
        H[t + 1], C[t + 1] = state.h, state.c
    return LstmSeqCache(H, C, I, F, O, G)


def _lstm_seq_backward_np(p: LstmParams, X, cache: LstmSeqCache, dH_up):
    T, _, B = X.shape
    grads = {k: np.zeros_like(v) for k, v in p.named().items()}
    dX = np.empty_like(X)
    dh = np.zeros((p.hidden_size, B))
    dc = np.zeros((p.hidden_size, B))
    for t in range(T - 1, -1, -1):
        step = cells.LstmStepCache(x=X[t], h_prev=cache.H[t], c_prev=cache.C[t],
                                   i=cache.I[t], f=cache.F[t], o=cache.O[t],
                                   g=cache.G[t], c=cache.C[t + 1])
        g, dX[t], dh, dc = cells.lstm_step_backward(p, step, dh + dH_up[t], dc)
        for k, v in g.items():
            grads[k] += v
    return grads, dX, dh, dc


def _gru_seq_forward_np(p: GruParams, X, h0) -> GruSeqCache:
    T, _, B = X.shape
    hd = p.hidden_size
    H = np.empty((T + 1, hd, B))
    R = np.empty((T, hd, B))
    Z = np.empty((T, hd, B))
    HT = np.empty((T, hd, B))
    H[0] = h0
    state = CellState(h=h0, c=np.zeros_like(h0))
    for t in range(T):
        state, cache = cells.gru_step(p, X[t], state)
        R[t], Z[t], HT[t] = cache.r, cache.z, cache.h_tilde
        H[t + 1] = state.h
    return GruSeqCache(H, R, Z, HT)


def _gru_seq_backward_np(p: GruParams, X, cache: GruSeqCache, dH_up):
    T, _, B = X.shape
    grads = {k: np.zeros_like(v) for k, v in p.named().items()}
    dX = np.empty_like(X)
    dh = np.zeros((p.hidden_size, B))
    for t in range(T - 1, -1, -1):
        step = cells.GruStepCache(x=X[t], h_prev=cache.H[t], r=cache.R[t],
                                  z=cache.Z[t], h_tilde=cache.HT[t])
        g, dX[t], dh = cells.gru_step_backward(p, step, dh + dH_up[t])
        for k, v in g.items():
            grads[k] += v
    return grads, dX, dh


# ---------------------------------------------------------------------------
# numba kernels: same algebra, compiled loops
# ---------------------------------------------------------------------------


@njit(cache=True)
def _nb_sigmoid(a):
    e = np.exp(-np.abs(a))
    return np.where(a >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))


@njit(cache=True)
def _nb_lstm_forward(Wxi, Wxf, Wxo, Wxg, Whi, Whf, Who, Whg,
                     bi, bf, bo, bg, X, h0, c0):
    T = X.shape[0]
    hd = Wxi.shape[0]
    B = X.shape[2]
    H = np.empty((T + 1, hd, B))
    C = np.empty((T + 1, hd, B))
    I = np.empty((T, hd, B))
    F = np.empty((T, hd, B))
    O = np.empty((T, hd, B))
    G = np.empty((T, hd, B))
    H[0] = h0
    C[0] = c0
    for t in range(T):
        xt = X[t]
        hp = H[t]
        it = _nb_sigmoid(np.dot(Wxi, xt) + np.dot(Whi, hp) + bi)
        ft = _nb_sigmoid(np.dot(Wxf, xt) + np.dot(Whf, hp) + bf)
        ot = _nb_sigmoid(np.dot(Wxo, xt) + np.dot(Who, hp) + bo)
        gt = np.tanh(np.dot(Wxg, xt) + np.dot(Whg, hp) + bg)
        ct = ft * C[t] + it * gt
        I[t] = it
        F[t] = ft
        O[t] = ot
        G[t] = gt
        C[t + 1] = ct
        H[t + 1] = ot * np.tanh(ct)
    return H, C, I, F, O, G


@njit(cache=True)
def _nb_lstm_backward(Wxi, Wxf, Wxo, Wxg, Whi, Whf, Who, Whg,
                      X, H, C, I, F, O, G, dH_up):
    T = X.shape[0]
    hd = Wxi.shape[0]
    B = X.shape[2]
    dWxi = np.zeros_like(Wxi)
    dWxf = np.zeros_like(Wxf)
    dWxo = np.zeros_like(Wxo)
    dWxg = np.zeros_like(Wxg)
    dWhi = np.zeros_like(Whi)
    dWhf = np.zeros_like(Whf)
    dWho = np.zeros_like(Who)
    dWhg = np.zeros_like(Whg)
    dbi = np.zeros((hd, 1))
    dbf = np.zeros((hd, 1))
    dbo = np.zeros((hd, 1))
    dbg = np.zeros((hd, 1))
    dX = np.empty_like(X)
    dh = np.zeros((hd, B))
    dc = np.zeros((hd, B))
    for t in range(T - 1, -1, -1):
        dht = dh + dH_up[t]
        tc = np.tanh(C[t + 1])
        do = dht * tc
        dct = dc + dht * O[t] * (1.0 - tc * tc)
        di = dct * G[t]
        df = dct * C[t]
        dg = dct * I[t]
        dc = dct * F[t]
        da_i = di * I[t] * (1.0 - I[t])
        da_f = df * F[t] * (1.0 - F[t])
        da_o = do * O[t] * (1.0 - O[t])
        da_g = dg * (1.0 - G[t] * G[t])
        xT = X[t].T
        hT = H[t].T
        dWxi += np.dot(da_i, xT)
        dWxf += np.dot(da_f, xT)
        dWxo += np.dot(da_o, xT)
        dWxg += np.dot(da_g, xT)
        dWhi += np.dot(da_i, hT)
        dWhf += np.dot(da_f, hT)
        dWho += np.dot(da_o, hT)
        dWhg += np.dot(da_g, hT)
        dbi += np.sum(da_i, axis=1).reshape(hd, 1)
        dbf += np.sum(da_f, axis=1).reshape(hd, 1)
        dbo += np.sum(da_o, axis=1).reshape(hd, 1)
        dbg += np.sum(da_g, axis=1).reshape(hd, 1)
        dX[t] = (np.dot(Wxi.T, da_i) + np.dot(Wxf.T, da_f)
                 + np.dot(Wxo.T, da_o) + np.dot(Wxg.T, da_g))
        dh = (np.dot(Whi.T, da_i) + np.dot(Whf.T, da_f)
              + np.dot(Who.T, da_o) + np.dot(Whg.T, da_g))
    return (dWxi, dWxf, dWxo, dWxg, dWhi, dWhf, dWho, dWhg,
            dbi, dbf, dbo, dbg, dX, dh, dc)


@njit(cache=True)
def _nb_gru_forward(Wxr, Wxz, Wxh, Whr, Whz, Whh, br, bz, bh, X, h0):
    T = X.shape[0]
    hd = Wxr.shape[0]
    B = X.shape[2]
    H = np.empty((T + 1, hd, B))
    R = np.empty((T, hd, B))
    Z = np.empty((T, hd, B))
    HT = np.empty((T, hd, B))
    H[0] = h0
    for t in range(T):
        xt = X[t]
        hp = H[t]
        rt = _nb_sigmoid(np.dot(Wxr, xt) + np.dot(Whr, hp) + br)
        zt = _nb_sigmoid(np.dot(Wxz, xt) + np.dot(Whz, hp) + bz)
        ht = np.tanh(np.dot(Wxh, xt) + np.dot(Whh, rt * hp) + bh)
        R[t] = rt
        Z[t] = zt
        HT[t] = ht
        H[t + 1] = zt * hp + (1.0 - zt) * ht
    return H, R, Z, HT


@njit(cache=True)
def _nb_gru_backward(Wxr, Wxz, Wxh, Whr, Whz, Whh, X, H, R, Z, HT, dH_up):
    T = X.shape[0]
    hd = Wxr.shape[0]
    B = X.shape[2]
    dWxr = np.zeros_like(Wxr)
    dWxz = np.zeros_like(Wxz)
    dWxh = np.zeros_like(Wxh)
    dWhr = np.zeros_like(Whr)
    dWhz = np.zeros_like(Whz)
    dWhh = np.zeros_like(Whh)
    dbr = np.zeros((hd, 1))
    dbz = np.zeros((hd, 1))
    dbh = np.zeros((hd, 1))
    dX = np.empty_like(X)
    dh = np.zeros((hd, B))
    for t in range(T - 1, -1, -1):
        dht = dh + dH_up[t]
        dz = dht * (H[t] - HT[t])
        dh_tilde = dht * (1.0 - Z[t])
        dh_prev = dht * Z[t]
        da_h = dh_tilde * (1.0 - HT[t] * HT[t])
        d_rh = np.dot(Whh.T, da_h)
        dr = d_rh * H[t]
        dh_prev = dh_prev + d_rh * R[t]
        da_r = dr * R[t] * (1.0 - R[t])
        da_z = dz * Z[t] * (1.0 - Z[t])
        xT = X[t].T
        hT = H[t].T
        dWxr += np.dot(da_r, xT)
        dWxz += np.dot(da_z, xT)
        dWxh += np.dot(da_h, xT)
        dWhr += np.dot(da_r, hT)
        dWhz += np.dot(da_z, hT)
        dWhh += np.dot(da_h, np.ascontiguousarray((R[t] * H[t]).T))
        dbr += np.sum(da_r, axis=1).reshape(hd, 1)
        dbz += np.sum(da_z, axis=1).reshape(hd, 1)
        dbh += np.sum(da_h, axis=1).reshape(hd, 1)
        dX[t] = np.dot(Wxr.T, da_r) + np.dot(Wxz.T, da_z) + np.dot(Wxh.T, da_h)
        dh = dh_prev + np.dot(Whr.T, da_r) + np.dot(Whz.T, da_z)
    return dWxr, dWxz, dWxh, dWhr, dWhz, dWhh, dbr, dbz, dbh, dX, dh


# ---------------------------------------------------------------------------
# public dispatchers
# ---------------------------------------------------------------------------


def lstm_sequence(p: LstmParams, X: np.ndarray, h0: np.ndarray, c0: np.ndarray) -> LstmSeqCache:
    """Run an LSTM over a (steps, input_dim, batch) sequence."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    _check_seq_args("lstm", p, X, h0)
    if get_backend() == "numba":
        out = _nb_lstm_forward(p.W_xi, p.W_xf, p.W_xo, p.W_xg,
                               p.W_hi, p.W_hf, p.W_ho, p.W_hg,
                               p.b_i, p.b_f, p.b_o, p.b_g,
                               X, np.ascontiguousarray(h0), np.ascontiguousarray(c0))
        return LstmSeqCache(*out)
    return _lstm_seq_forward_np(p, X, h0, c0)


def lstm_sequence_backward(p: LstmParams, X: np.ndarray, cache: LstmSeqCache,
                           dH_up: np.ndarray):
    """Backpropagate through a full LSTM run.

    ``dH_up`` holds the upstream gradient w.r.t. every step's hidden output.
    Returns ``(param_grads, dX, dh0, dc0)``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    dH_up = np.ascontiguousarray(dH_up, dtype=np.float64)
    if get_backend() == "numba":
        out = _nb_lstm_backward(p.W_xi, p.W_xf, p.W_xo, p.W_xg,
                                p.W_hi, p.W_hf, p.W_ho, p.W_hg,
                                X, cache.H, cache.C, cache.I, cache.F, cache.O, cache.G,
                                dH_up)
        names = ("W_xi", "W_xf", "W_xo", "W_xg", "W_hi", "W_hf", "W_ho", "W_hg",
                 "b_i", "b_f", "b_o", "b_g")
        grads = dict(zip(names, out[:12]))
        return grads, out[12], out[13], out[14]
    return _lstm_seq_backward_np(p, X, cache, dH_up)


def gru_sequence(p: GruParams, X: np.ndarray, h0: np.ndarray) -> GruSeqCache:
    """Run a GRU over a (steps, input_dim, batch) sequence."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    _check_seq_args("gru", p, X, h0)
    if get_backend() == "numba":
        out = _nb_gru_forward(p.W_xr, p.W_xz, p.W_xh, p.W_hr, p.W_hz, p.W_hh,
                              p.b_r, p.b_z, p.b_h, X, np.ascontiguousarray(h0))
        return GruSeqCache(*out)
    return _gru_seq_forward_np(p, X, h0)


def gru_sequence_backward(p: GruParams, X: np.ndarray, cache: GruSeqCache,
                          dH_up: np.ndarray):
    """Backpropagate through a full GRU run; returns ``(param_grads, dX, dh0)``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    dH_up = np.ascontiguousarray(dH_up, dtype=np.float64)
    if get_backend() == "numba":
        out = _nb_gru_backward(p.W_xr, p.W_xz, p.W_xh, p.W_hr, p.W_hz, p.W_hh,
                               X, cache.H, cache.R, cache.Z, cache.HT, dH_up)
        names = ("W_xr", "W_xz", "W_xh", "W_hr", "W_hz", "W_hh", "b_r", "b_z", "b_h")
        grads = dict(zip(names, out[:9]))
        return grads, out[9], out[10]
    return _gru_seq_backward_np(p, X, cache, dH_up)
