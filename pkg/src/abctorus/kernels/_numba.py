"""numba-compiled kernels; per-point scalar loops, same semantics as ``_numpy``."""
from __future__ import annotations

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi
NEWTON_MAXIT = 50
NEWTON_TOL = 1e-15

# Per-point helpers never allocate, so they are compiled without reference
# counting: otherwise every call increfs and decrefs each array argument,
# which costs several times the arithmetic of a linear stage.
helper = njit(cache=True, _nrt=False)


@helper
def _perturb(x0, x1, coef, freq, phase, lo, hi):
    p0 = 0.0
    p1 = 0.0
    j00 = 0.0
    j01 = 0.0
    j10 = 0.0
    j11 = 0.0
    for k in range(lo, hi):
        arg = TWO_PI * (freq[k, 0] * x0 + freq[k, 1] * x1)
        if phase[k] == 0:
            s = math.sin(arg)
            ds = math.cos(arg)
        else:
            s = math.cos(arg)
            ds = -math.sin(arg)
        p0 += coef[k, 0] * s
        p1 += coef[k, 1] * s
        g0 = TWO_PI * freq[k, 0] * ds
        g1 = TWO_PI * freq[k, 1] * ds
        j00 += coef[k, 0] * g0
        j01 += coef[k, 0] * g1
        j10 += coef[k, 1] * g0
        j11 += coef[k, 1] * g1
    return p0, p1, j00, j01, j10, j11


@helper
def _inverse_stage(minv, trans, s, coef, freq, phase, lo, hi, x0, x1):
    """Inverse stage by Newton on y + P(y) = M^-1 (x - t)."""
    m00 = minv[s, 0, 0]
    m01 = minv[s, 0, 1]
    m10 = minv[s, 1, 0]
    m11 = minv[s, 1, 1]
    u0 = x0 - trans[s, 0]
    u1 = x1 - trans[s, 1]
    z0 = m00 * u0 + m01 * u1
    z1 = m10 * u0 + m11 * u1
    if hi == lo:
        return z0, z1, m00, m01, m10, m11, True
    y0 = z0
    y1 = z1
    ok = False
    for _ in range(NEWTON_MAXIT):
        q0, q1, d00, d01, d10, d11 = _perturb(y0, y1, coef, freq, phase, lo, hi)
        r0 = y0 + q0 - z0
        r1 = y1 + q1 - z1
        a = 1.0 + d00
        d = 1.0 + d11
        det = a * d - d01 * d10
        e0 = (d * r0 - d01 * r1) / det
        e1 = (-d10 * r0 + a * r1) / det
        y0 -= e0
        y1 -= e1
        scale = max(1.0, max(abs(y0), abs(y1)))
        if max(abs(e0), abs(e1)) <= NEWTON_TOL * scale * 8:
            ok = True
            break
    q0, q1, d00, d01, d10, d11 = _perturb(y0, y1, coef, freq, phase, lo, hi)
    a = 1.0 + d00
    d = 1.0 + d11
    det = a * d - d01 * d10
    i00 = d / det
    i01 = -d01 / det
    i10 = -d10 / det
    i11 = a / det
    return (y0, y1, i00 * m00 + i01 * m10, i00 * m01 + i01 * m11,
            i10 * m00 + i11 * m10, i10 * m01 + i11 * m11, ok)


@helper
def _stage(kind, mats, minv, trans, s, coef, freq, phase, lo, hi, x0, x1):
    """Stage s at one point: returns (y0, y1, J00, J01, J10, J11, ok).

    The forward case is kept small so it inlines; the Newton solve lives in
    ``_inverse_stage`` because a large body here slows every forward stage.
    """
    if kind != 0:
        return _inverse_stage(minv, trans, s, coef, freq, phase, lo, hi, x0, x1)
    p0, p1, d00, d01, d10, d11 = _perturb(x0, x1, coef, freq, phase, lo, hi)
    y0 = mats[s, 0, 0] * x0 + mats[s, 0, 1] * x1 + trans[s, 0] + p0
    y1 = mats[s, 1, 0] * x0 + mats[s, 1, 1] * x1 + trans[s, 1] + p1
    return (y0, y1, mats[s, 0, 0] + d00, mats[s, 0, 1] + d01,
            mats[s, 1, 0] + d10, mats[s, 1, 1] + d11, True)


@helper
def _program_point(kinds, mats, minv, trans, tptr, coef, freq, phase, x0, x1):
    J00 = 1.0
    J01 = 0.0
    J10 = 0.0
    J11 = 1.0
    ok_all = True
    for s in range(kinds.shape[0]):
        x0, x1, a, b, c, d, ok = _stage(kinds[s], mats, minv, trans, s, coef, freq, phase,
                                        tptr[s], tptr[s + 1], x0, x1)
        ok_all = ok_all and ok
        n00 = a * J00 + b * J10
        n01 = a * J01 + b * J11
        n10 = c * J00 + d * J10
        n11 = c * J01 + d * J11
        J00, J01, J10, J11 = n00, n01, n10, n11
    return x0, x1, J00, J01, J10, J11, ok_all


@njit(cache=True, nogil=True)
def apply(kinds, mats, minv, trans, tptr, coef, freq, phase, X):
    N = X.shape[0]
    Y = np.empty((N, 2))
    status = np.zeros(N, dtype=np.int64)
    for i in range(N):
        y0, y1, _, _, _, _, ok = _program_point(kinds, mats, minv, trans, tptr, coef, freq, phase, X[i, 0], X[i, 1])
        Y[i, 0] = y0
        Y[i, 1] = y1
        if not ok:
            status[i] = 1
    return Y, status


@njit(cache=True, nogil=True)
def apply_jac(kinds, mats, minv, trans, tptr, coef, freq, phase, X):
    N = X.shape[0]
    Y = np.empty((N, 2))
    J = np.empty((N, 2, 2))
    status = np.zeros(N, dtype=np.int64)
    for i in range(N):
        y0, y1, a, b, c, d, ok = _program_point(kinds, mats, minv, trans, tptr, coef, freq, phase, X[i, 0], X[i, 1])
        Y[i, 0] = y0
        Y[i, 1] = y1
        J[i, 0, 0] = a
        J[i, 0, 1] = b
        J[i, 1, 0] = c
        J[i, 1, 1] = d
        if not ok:
            status[i] = 1
    return Y, J, status


@njit(cache=True, nogil=True)
def orbit_displacements(kinds, mats, minv, trans, tptr, coef, freq, phase, X, checkpoints):
    N = X.shape[0]
    C = checkpoints.shape[0]
    out = np.zeros((N, C, 2))
    status = np.zeros(N, dtype=np.int64)
    n_max = checkpoints[C - 1] if C > 0 else 0
    for i in range(N):
        b0 = math.floor(X[i, 0])
        b1 = math.floor(X[i, 1])
        f0 = X[i, 0] - b0
        f1 = X[i, 1] - b1
        x0 = f0
        x1 = f1
        s0 = 0.0
        s1 = 0.0
        c = 0
        for n in range(1, n_max + 1):
            x0, x1, _, _, _, _, ok = _program_point(kinds, mats, minv, trans, tptr, coef, freq, phase, x0, x1)
            if not ok:
                status[i] = 1
            fl0 = math.floor(x0)
            fl1 = math.floor(x1)
            x0 -= fl0
            x1 -= fl1
            s0 += fl0
            s1 += fl1
            while c < C and checkpoints[c] == n:
                out[i, c, 0] = (s0 + x0) - f0
                out[i, c, 1] = (s1 + x1) - f1
                c += 1
    return out, status


@njit(cache=True, nogil=True)
def torus_orbit(kinds, mats, minv, trans, tptr, coef, freq, phase, X, n):
    N = X.shape[0]
    Y = np.empty((N, 2))
    status = np.zeros(N, dtype=np.int64)
    for i in range(N):
        x0 = X[i, 0] - math.floor(X[i, 0])
        x1 = X[i, 1] - math.floor(X[i, 1])
        for _ in range(n):
            x0, x1, _, _, _, _, ok = _program_point(kinds, mats, minv, trans, tptr, coef, freq, phase, x0, x1)
            if not ok:
                status[i] = 1
            x0 -= math.floor(x0)
            x1 -= math.floor(x1)
        Y[i, 0] = x0
        Y[i, 1] = x1
    return Y, status


@njit(cache=True, nogil=True)
def lyapunov(kinds, mats, minv, trans, tptr, coef, freq, phase, X, v0, burn, length):
    N = X.shape[0]
    total = np.zeros(N)
    status = np.zeros(N, dtype=np.int64)
    nv = math.sqrt(v0[0] * v0[0] + v0[1] * v0[1])
    for i in range(N):
        x0 = X[i, 0] - math.floor(X[i, 0])
        x1 = X[i, 1] - math.floor(X[i, 1])
        w0 = v0[0] / nv
        w1 = v0[1] / nv
        acc = 0.0
        comp = 0.0
        for n in range(burn + length):
            x0, x1, a, b, c, d, ok = _program_point(kinds, mats, minv, trans, tptr, coef, freq, phase, x0, x1)
            if not ok:
                status[i] = 1
            x0 -= math.floor(x0)
            x1 -= math.floor(x1)
            u0 = a * w0 + b * w1
            u1 = c * w0 + d * w1
            nrm = math.sqrt(u0 * u0 + u1 * u1)
            w0 = u0 / nrm
            w1 = u1 / nrm
            if n >= burn:
                y = math.log(nrm) - comp
                t = acc + y
                comp = (t - acc) - y
                acc = t
        total[i] = acc
    return total, status


@njit(cache=True, nogil=True)
def bilinear(values, P):
    N = values.shape[0]
    K = values.shape[2]
    out = np.empty((P.shape[0], K))
    for p in range(P.shape[0]):
        u = (P[p, 0] - math.floor(P[p, 0])) * N
        v = (P[p, 1] - math.floor(P[p, 1])) * N
        i0 = int(math.floor(u))
        j0 = int(math.floor(v))
        fu = u - i0
        fv = v - j0
        i0 %= N
        j0 %= N
        i1 = (i0 + 1) % N
        j1 = (j0 + 1) % N
        for k in range(K):
            out[p, k] = ((1 - fu) * (1 - fv) * values[i0, j0, k] + fu * (1 - fv) * values[i1, j0, k]
                         + (1 - fu) * fv * values[i0, j1, k] + fu * fv * values[i1, j1, k])
    return out


@njit(cache=True, nogil=True)
def circle_orbit(a, ks, cs, ds, x0, n):
    M = x0.shape[0]
    fr = np.empty(M)
    ip = np.empty(M)
    for m in range(M):
        b = math.floor(x0[m])
        f = x0[m] - b
        for _ in range(n):
            y = f + a
            for j in range(ks.shape[0]):
                arg = TWO_PI * ks[j] * f
                y += cs[j] * math.sin(arg) + ds[j] * math.cos(arg)
            fl = math.floor(y)
            f = y - fl
            b += fl
        fr[m] = f
        ip[m] = b
    return fr, ip
