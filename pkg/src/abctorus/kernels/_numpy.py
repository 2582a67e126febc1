"""Vectorized numpy implementations of the hot loops (fallback backend).

Every function matches the signature and semantics of its counterpart in
``_numba``; loops over points are vectorized, loops over time are explicit.
"""
from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi
NEWTON_MAXIT = 50
NEWTON_TOL = 1e-15


def _perturb(X, coef, freq, phase, lo, hi, want_jac):
    N = X.shape[0]
    p = np.zeros((N, 2))
    J = np.zeros((N, 2, 2)) if want_jac else None
    for k in range(lo, hi):
        arg = TWO_PI * (freq[k, 0] * X[:, 0] + freq[k, 1] * X[:, 1])
        if phase[k] == 0:
            s, ds = np.sin(arg), np.cos(arg)
        else:
            s, ds = np.cos(arg), -np.sin(arg)
        p[:, 0] += coef[k, 0] * s
        p[:, 1] += coef[k, 1] * s
        if want_jac:
            g0 = TWO_PI * freq[k, 0] * ds
            g1 = TWO_PI * freq[k, 1] * ds
            J[:, 0, 0] += coef[k, 0] * g0
            J[:, 0, 1] += coef[k, 0] * g1
            J[:, 1, 0] += coef[k, 1] * g0
            J[:, 1, 1] += coef[k, 1] * g1
    return p, J


def _affine(M, t, X):
    return X @ M.T + t


def _stage(kind, M, Mi, t, coef, freq, phase, lo, hi, X, want_jac, status):
    if kind == 0:
        p, DP = _perturb(X, coef, freq, phase, lo, hi, want_jac)
        Y = _affine(M, t, X) + p
        J = (M[None] + DP) if want_jac else None
        return Y, J
    z = (X - t) @ Mi.T
    if hi == lo:
        return z, (np.broadcast_to(Mi, (X.shape[0], 2, 2)).copy() if want_jac else None)
    Y = z.copy()
    active = np.ones(X.shape[0], dtype=bool)
    for _ in range(NEWTON_MAXIT):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        q, DQ = _perturb(Y[idx], coef, freq, phase, lo, hi, True)
        r = Y[idx] + q - z[idx]
        a = 1.0 + DQ[:, 0, 0]
        b = DQ[:, 0, 1]
        c = DQ[:, 1, 0]
        d = 1.0 + DQ[:, 1, 1]
        det = a * d - b * c
        d0 = (d * r[:, 0] - b * r[:, 1]) / det
        d1 = (-c * r[:, 0] + a * r[:, 1]) / det
        Y[idx, 0] -= d0
        Y[idx, 1] -= d1
        scale = np.maximum(1.0, np.abs(Y[idx]).max(axis=1))
        done = np.maximum(np.abs(d0), np.abs(d1)) <= NEWTON_TOL * scale * 8
        active[idx[done]] = False
    if active.any():
        status[active] = 1
    J = None
    if want_jac:
        _, DQ = _perturb(Y, coef, freq, phase, lo, hi, True)
        I_DQ = np.eye(2)[None] + DQ
        J = np.linalg.inv(I_DQ) @ Mi[None]
    return Y, J


def apply(kinds, mats, minv, trans, tptr, coef, freq, phase, X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    status = np.zeros(X.shape[0], dtype=np.int64)
    for s in range(kinds.shape[0]):
        X, _ = _stage(kinds[s], mats[s], minv[s], trans[s], coef, freq, phase, tptr[s], tptr[s + 1], X, False, status)
    return X, status


def apply_jac(kinds, mats, minv, trans, tptr, coef, freq, phase, X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    status = np.zeros(X.shape[0], dtype=np.int64)
    J = np.broadcast_to(np.eye(2), (X.shape[0], 2, 2)).copy()
    for s in range(kinds.shape[0]):
        X, Js = _stage(kinds[s], mats[s], minv[s], trans[s], coef, freq, phase, tptr[s], tptr[s + 1], X, True, status)
        J = Js @ J
    return X, J, status


def orbit_displacements(kinds, mats, minv, trans, tptr, coef, freq, phase, X, checkpoints):
    """F^n(x) - x at each checkpoint n for an identity-homotopic program.

    The orbit is kept in [0,1)^2 and integer shifts are accumulated separately.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    N = X.shape[0]
    C = checkpoints.shape[0]
    out = np.zeros((N, C, 2))
    status = np.zeros(N, dtype=np.int64)
    base = np.floor(X)
    frac = X - base
    shift = np.zeros((N, 2))
    c = 0
    n_max = checkpoints[-1] if C else 0
    for n in range(1, n_max + 1):
        for s in range(kinds.shape[0]):
            frac, _ = _stage(kinds[s], mats[s], minv[s], trans[s], coef, freq, phase, tptr[s], tptr[s + 1],
                             frac, False, status)
        fl = np.floor(frac)
        frac = frac - fl
        shift += fl
        while c < C and checkpoints[c] == n:
            out[:, c, :] = (shift + frac) - (X - base)
            c += 1
    return out, status


def torus_orbit(kinds, mats, minv, trans, tptr, coef, freq, phase, X, n):
    X = np.ascontiguousarray(X, dtype=np.float64)
    X = X - np.floor(X)
    status = np.zeros(X.shape[0], dtype=np.int64)
    for _ in range(n):
        for s in range(kinds.shape[0]):
            X, _ = _stage(kinds[s], mats[s], minv[s], trans[s], coef, freq, phase, tptr[s], tptr[s + 1],
                          X, False, status)
        X = X - np.floor(X)
    return X, status


def lyapunov(kinds, mats, minv, trans, tptr, coef, freq, phase, X, v0, burn, length):
    """Sum of log tangent growth over ``length`` steps after ``burn`` steps, per orbit."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    X = X - np.floor(X)
    N = X.shape[0]
    status = np.zeros(N, dtype=np.int64)
    V = np.tile(np.asarray(v0, dtype=np.float64), (N, 1))
    V /= np.linalg.norm(V, axis=1)[:, None]
    total = np.zeros(N)
    comp = np.zeros(N)
    for n in range(burn + length):
        J = np.broadcast_to(np.eye(2), (N, 2, 2)).copy()
        for s in range(kinds.shape[0]):
            X, Js = _stage(kinds[s], mats[s], minv[s], trans[s], coef, freq, phase, tptr[s], tptr[s + 1],
                           X, True, status)
            J = Js @ J
        X = X - np.floor(X)
        V = np.einsum("nij,nj->ni", J, V)
        nrm = np.sqrt(V[:, 0] ** 2 + V[:, 1] ** 2)
        V /= nrm[:, None]
        if n >= burn:
            y = np.log(nrm) - comp
            t = total + y
            comp = (t - total) - y
            total = t
    return total, status


def bilinear(values, P):
    """Periodic bilinear interpolation of an (N, N, k) node array at points P (M, 2)."""
    N = values.shape[0]
    u = (P[:, 0] - np.floor(P[:, 0])) * N
    v = (P[:, 1] - np.floor(P[:, 1])) * N
    i0 = np.floor(u).astype(np.int64)
    j0 = np.floor(v).astype(np.int64)
    fu = (u - i0)[:, None]
    fv = (v - j0)[:, None]
    i0 %= N
    j0 %= N
    i1 = (i0 + 1) % N
    j1 = (j0 + 1) % N
    return ((1 - fu) * (1 - fv) * values[i0, j0] + fu * (1 - fv) * values[i1, j0]
            + (1 - fu) * fv * values[i0, j1] + fu * fv * values[i1, j1])


def circle_orbit(a, ks, cs, ds, x0, n):
    """n iterates of x -> x + a + sum c sin(2 pi k x) + d cos(2 pi k x); returns (frac, integer part)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    ip = np.floor(x0)
    fr = x0 - ip
    for _ in range(n):
        arg = TWO_PI * np.outer(fr, ks)
        y = fr + a + (np.sin(arg) @ cs) + (np.cos(arg) @ ds)
        fl = np.floor(y)
        fr = y - fl
        ip = ip + fl
    return fr, ip
