"""Compare the numba kernels against the pure-numpy fallback on the training
hot path (full forward + backward of the encoder-decoder).

Usage:
    python benchmarks/bench_backends.py [--iters 20] [--batch 16] [--frames 30]

Two workloads are timed per cell kind: a small model where Python-loop
overhead dominates, and the default-size model (512 hidden units) where BLAS
does most of the work.  The first numba call per configuration triggers JIT
compilation and is excluded from timing.
"""

import argparse
import time

import numpy as np

from v2c import kernels
from v2c.model import ModelConfig, init_params, loss_and_gradients
from v2c.vocab import EOC_INDEX


def make_case(kind, hidden, feature_dim, vocab, frames, batch, seed=0):
    config = ModelConfig(cell_kind=kind, hidden=hidden, feature_dim=feature_dim,
                         vocab_size=vocab, n_steps=frames, seed=seed)
    params = init_params(config)
    rng = np.random.default_rng(seed + 1)
    X = rng.uniform(-1, 1, (frames, feature_dim, batch))
    targets = np.zeros((frames, batch), dtype=np.int64)
    masks = np.zeros((frames, batch), dtype=bool)
    for b in range(batch):
        n_words = int(rng.integers(1, min(6, frames - 1)))
        targets[:n_words, b] = rng.integers(2, vocab, size=n_words)
        targets[n_words, b] = EOC_INDEX
        masks[:n_words + 1, b] = True
    return params, X, targets, masks


def time_backend(backend, case, iters):
    kernels.set_backend(backend)
    params, X, targets, masks = case
    loss_and_gradients(params, X, targets, masks)  # warmup / JIT compile
    start = time.perf_counter()
    for _ in range(iters):
        loss_and_gradients(params, X, targets, masks)
    return (time.perf_counter() - start) / iters


def time_kernel(backend, hidden, dim, frames, batch, iters, seed=0):
    """Recurrence kernel alone (forward + backward), no projection/softmax."""
    kernels.set_backend(backend)
    rng = np.random.default_rng(seed)
    config = ModelConfig(cell_kind="lstm", hidden=hidden, feature_dim=dim,
                         vocab_size=8, n_steps=frames, seed=seed)
    p = init_params(config).encoder
    X = rng.uniform(-1, 1, (frames, dim, batch))
    h0 = np.zeros((hidden, batch))
    c0 = np.zeros((hidden, batch))
    dH = rng.uniform(-1, 1, (frames, hidden, batch))
    cache = kernels.lstm_sequence(p, X, h0, c0)  # warmup / JIT compile
    kernels.lstm_sequence_backward(p, X, cache, dH)
    start = time.perf_counter()
    for _ in range(iters):
        cache = kernels.lstm_sequence(p, X, h0, c0)
        kernels.lstm_sequence_backward(p, X, cache, dH)
    return (time.perf_counter() - start) / iters


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--iters", type=int, default=20)
    parser.add_argument("--batch", type=int, default=16)
    parser.add_argument("--frames", type=int, default=30)
    args = parser.parse_args()

    if not kernels.NUMBA_AVAILABLE:
        raise SystemExit("numba is not importable; nothing to compare")

    sizes = [("small  (h=64,  d=16,  |D|=32)", 64, 16, 32),
             ("default(h=512, d=128, |D|=128)", 512, 128, 128)]
    print(f"train-step (forward+backward) mean seconds over {args.iters} iters, "
          f"batch={args.batch}, frames={args.frames}")
    print(f"{'workload':<34}{'cell':<6}{'numpy':>10}{'numba':>10}{'speedup':>9}")
    for label, hidden, dim, vocab in sizes:
        for kind in ("lstm", "gru"):
            case = make_case(kind, hidden, dim, vocab, args.frames, args.batch)
            t_np = time_backend("numpy", case, args.iters)
            t_nb = time_backend("numba", case, args.iters)
            print(f"{label:<34}{kind:<6}{t_np:>10.4f}{t_nb:>10.4f}{t_np / t_nb:>8.2f}x")

    print("\nlstm recurrence kernel alone, batch=1 (per-video translation shape)")
    print(f"{'workload':<34}{'':<6}{'numpy':>10}{'numba':>10}{'speedup':>9}")
    for label, hidden, dim, _ in sizes:
        t_np = time_kernel("numpy", hidden, dim, args.frames, 1, args.iters)
        t_nb = time_kernel("numba", hidden, dim, args.frames, 1, args.iters)
        print(f"{label:<34}{'':<6}{t_np:>10.4f}{t_nb:>10.4f}{t_np / t_nb:>8.2f}x")
    kernels.set_backend("auto")


if __name__ == "__main__":
    main()
