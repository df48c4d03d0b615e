"""Cross-backend agreement: the numba kernels must reproduce the numpy
fallback (which is a fold of the verified per-step functions) on both the
forward run and the backward accumulation."""

import numpy as np
import pytest

import v2c.kernels as kernels
from test_cells import random_gru, random_lstm
from v2c.errors import UsageError


@pytest.fixture(autouse=True)
def restore_backend():
    before = kernels.get_backend()
    yield
    kernels.set_backend(before)


def test_backend_selection():
    assert kernels.set_backend("numpy") == "numpy"
    if kernels.NUMBA_AVAILABLE:
        assert kernels.set_backend("numba") == "numba"
        assert kernels.set_backend("auto") == "numba"
    with pytest.raises(UsageError):
        kernels.set_backend("cuda")


def _random_case(rng, kind):
    T, hidden, input_dim, B = (int(rng.integers(1, 6)), int(rng.integers(1, 6)),
                               int(rng.integers(1, 5)), int(rng.integers(1, 4)))
    p = random_lstm(rng, hidden, input_dim) if kind == "lstm" else random_gru(rng, hidden, input_dim)
    X = rng.uniform(-1, 1, (T, input_dim, B))
    h0 = rng.uniform(-1, 1, (hidden, B))
    c0 = rng.uniform(-1, 1, (hidden, B))
    dH = rng.uniform(-1, 1, (T, hidden, B))
    return p, X, h0, c0, dH


@pytest.mark.skipif(not kernels.NUMBA_AVAILABLE, reason="numba not installed")
@pytest.mark.parametrize("kind", ["lstm", "gru"])
def test_numba_matches_numpy(kind):
    rng = np.random.default_rng(20)
    for _ in range(25):
        p, X, h0, c0, dH = _random_case(rng, kind)
        kernels.set_backend("numpy")
        if kind == "lstm":
            cache_np = kernels.lstm_sequence(p, X, h0, c0)
            g_np, dX_np, dh0_np, dc0_np = kernels.lstm_sequence_backward(p, X, cache_np, dH)
        else:
            cache_np = kernels.gru_sequence(p, X, h0)
            g_np, dX_np, dh0_np = kernels.gru_sequence_backward(p, X, cache_np, dH)
        kernels.set_backend("numba")
        if kind == "lstm":
            cache_nb = kernels.lstm_sequence(p, X, h0, c0)
            g_nb, dX_nb, dh0_nb, dc0_nb = kernels.lstm_sequence_backward(p, X, cache_nb, dH)
        else:
            cache_nb = kernels.gru_sequence(p, X, h0)
            g_nb, dX_nb, dh0_nb = kernels.gru_sequence_backward(p, X, cache_nb, dH)
        for a, b in zip(cache_np, cache_nb):
            np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)
        assert g_np.keys() == g_nb.keys()
        for k in g_np:
            np.testing.assert_allclose(g_np[k], g_nb[k], rtol=1e-8, atol=1e-11)
        np.testing.assert_allclose(dX_np, dX_nb, rtol=1e-8, atol=1e-11)
        np.testing.assert_allclose(dh0_np, dh0_nb, rtol=1e-8, atol=1e-11)
        if kind == "lstm":
            np.testing.assert_allclose(dc0_np, dc0_nb, rtol=1e-8, atol=1e-11)


@pytest.mark.parametrize("backend", ["numpy", "numba"])
@pytest.mark.parametrize("kind", ["lstm", "gru"])
def test_sequence_equals_step_composition(backend, kind):
    if backend == "numba" and not kernels.NUMBA_AVAILABLE:
        pytest.skip("numba not installed")
    from v2c.cells import CellState, gru_step, lstm_step

    kernels.set_backend(backend)
    rng = np.random.default_rng(21)
    for _ in range(10):
        p, X, h0, c0, _ = _random_case(rng, kind)
        state = CellState(h=h0.copy(), c=c0.copy() if kind == "lstm" else np.zeros_like(h0))
        hs = []
        for t in range(X.shape[0]):
            state, _ = (lstm_step if kind == "lstm" else gru_step)(p, X[t], state)
            hs.append(state.h)
        if kind == "lstm":
            cache = kernels.lstm_sequence(p, X, h0, c0)
        else:
            cache = kernels.gru_sequence(p, X, h0)
        np.testing.assert_allclose(cache.H[1:], np.array(hs), rtol=1e-9, atol=1e-12)


def test_sequence_shape_validation():
    rng = np.random.default_rng(22)
    p = random_lstm(rng, 3, 2)
    with pytest.raises(UsageError):
        kernels.lstm_sequence(p, np.zeros((2, 5, 1)), np.zeros((3, 1)), np.zeros((3, 1)))
    with pytest.raises(UsageError):
        kernels.lstm_sequence(p, np.zeros((2, 2, 1)), np.zeros((4, 1)), np.zeros((4, 1)))
    with pytest.raises(UsageError):
        kernels.lstm_sequence(p, np.zeros((2, 2)), np.zeros((3, 1)), np.zeros((3, 1)))


def test_within_backend_determinism():
    rng = np.random.default_rng(23)
    p, X, h0, c0, dH = _random_case(rng, "lstm")
    cache1 = kernels.lstm_sequence(p, X, h0, c0)
    cache2 = kernels.lstm_sequence(p, X, h0, c0)
    for a, b in zip(cache1, cache2):
        assert np.array_equal(a, b)
    g1, dX1, _, _ = kernels.lstm_sequence_backward(p, X, cache1, dH)
    g2, dX2, _, _ = kernels.lstm_sequence_backward(p, X, cache2, dH)
    assert np.array_equal(dX1, dX2)
    for k in g1:
        assert np.array_equal(g1[k], g2[k])
