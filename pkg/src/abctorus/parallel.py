"""Deterministic chunked execution over point arrays.

Work is split into contiguous index blocks and merged in index order, so the
result never depends on scheduling.  The numba kernels release the GIL, which
lets a thread pool run them concurrently.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_DEFAULT_WORKERS = 1


def set_default_workers(n: int | None) -> None:
    global _DEFAULT_WORKERS
    _DEFAULT_WORKERS = max(1, int(n or os.cpu_count() or 1))


def default_workers() -> int:
    return _DEFAULT_WORKERS


def map_chunks(fn, X, workers: int | None = None, min_chunk: int = 64):
    """Apply ``fn`` to row blocks of X and concatenate each returned array in order.

    ``fn`` returns an array or a tuple of arrays whose leading axis matches its input.
    """
    X = np.asarray(X)
    w = max(1, int(workers or _DEFAULT_WORKERS))
    n = X.shape[0]
    if w == 1 or n < 2 * min_chunk:
        return fn(X)
    bounds = np.linspace(0, n, min(w, n // min_chunk) + 1).astype(int)
    blocks = [X[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=w) as pool:
        parts = list(pool.map(fn, blocks))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate([p[i] for p in parts]) for i in range(len(parts[0])))
    return np.concatenate(parts)
