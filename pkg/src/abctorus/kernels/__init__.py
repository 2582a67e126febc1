"""Backend selection for the hot loops.

numba is used when importable unless ``ABC_DISABLE_NUMBA=1``; the numpy
implementation is always available as ``numpy_impl`` for parity checks.
"""
from __future__ import annotations

import os

import numpy as np

from . import _numpy as numpy_impl

try:  # pragma: no cover - depends on environment
    if os.environ.get("ABC_DISABLE_NUMBA", "0") == "1":
        raise ImportError("disabled by ABC_DISABLE_NUMBA")
    from . import _numba as numba_impl
except ImportError:  # pragma: no cover
    numba_impl = None

_impl = numba_impl if numba_impl is not None else numpy_impl
BACKEND = "numba" if numba_impl is not None else "numpy"


def get_impl(backend: str | None = None):
    if backend is None:
        return _impl
    if backend == "numba":
        if numba_impl is None:
            raise RuntimeError("numba backend unavailable")
        return numba_impl
    if backend == "numpy":
        return numpy_impl
    raise ValueError(f"unknown backend {backend!r}")


def _f64(X):
    return np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))


def apply(prog, X, backend=None):
    return get_impl(backend).apply(*prog.arrays(), _f64(X))


def apply_jac(prog, X, backend=None):
    return get_impl(backend).apply_jac(*prog.arrays(), _f64(X))


def orbit_displacements(prog, X, checkpoints, backend=None):
    cp = np.ascontiguousarray(np.asarray(checkpoints, dtype=np.int64))
    return get_impl(backend).orbit_displacements(*prog.arrays(), _f64(X), cp)


def torus_orbit(prog, X, n, backend=None):
    return get_impl(backend).torus_orbit(*prog.arrays(), _f64(X), int(n))


def lyapunov(prog, X, v0, burn, length, backend=None):
    return get_impl(backend).lyapunov(*prog.arrays(), _f64(X), np.asarray(v0, dtype=np.float64),
                                      int(burn), int(length))


def bilinear(values, P, backend=None):
    vals = np.ascontiguousarray(values, dtype=np.float64)
    squeeze = vals.ndim == 2
    if squeeze:
        vals = vals[:, :, None]
    out = get_impl(backend).bilinear(vals, _f64(P))
    return out[:, 0] if squeeze else out


def circle_orbit(a, ks, cs, ds, x0, n, backend=None):
    return get_impl(backend).circle_orbit(float(a), np.asarray(ks, dtype=np.float64),
                                          np.asarray(cs, dtype=np.float64), np.asarray(ds, dtype=np.float64),
                                          np.atleast_1d(np.asarray(x0, dtype=np.float64)), int(n))
