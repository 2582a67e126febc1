"""Dynamics along one-dimensional leaves: circle rotation numbers, circle
conjugacies, the induced translation structure and the leaf flow g_t."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import kernels
from .errors import EmbeddingMismatch, FixedPointPresent, NotMonotone, PreconditionFailed, SmallDivisorOverflow
from .exact_linalg import IntMatrix2, QuadNum, eigen_data

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Circle lifts
# ---------------------------------------------------------------------------

@dataclass
class CircleLift:
    """Degree-one lift g(x) = x + a + periodic part.

    kind "rotation": g = x + a.
    kind "trig": g = x + a + sum c_j sin(2 pi k_j x) + d_j cos(2 pi k_j x).
    kind "sampled": g = x + periodic cubic spline through node displacements.
    kind "callable": g and g' given as vectorized callables (compositions, conjugates).
    """
    kind: str
    a: float = 0.0
    ks: tuple = ()
    cs: tuple = ()
    ds: tuple = ()
    nodes: np.ndarray | None = None
    fn: Callable | None = None
    dfn: Callable | None = None
    _spline: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "trig" and any(int(k) != k for k in self.ks):
            raise PreconditionFailed("trig frequencies must be integers", ks=list(self.ks))
        if self.kind == "sampled":
            v = np.asarray(self.nodes, dtype=float)
            x = np.arange(len(v) + 1) / len(v)
            self._spline = CubicSpline(x, np.append(v, v[0]), bc_type="periodic")

    # constructors
    @classmethod
    def rotation(cls, a: float) -> "CircleLift":
        return cls("rotation", float(a))

    @classmethod
    def trig(cls, a: float, terms=()) -> "CircleLift":
        """terms: iterable of (k, c_sin, d_cos)."""
        terms = list(terms)
        return cls("trig", float(a), tuple(int(t[0]) for t in terms), tuple(float(t[1]) for t in terms),
                   tuple(float(t[2]) for t in terms))

    @classmethod
    def sampled(cls, displacement_nodes) -> "CircleLift":
        return cls("sampled", nodes=np.asarray(displacement_nodes, dtype=float))

    @classmethod
    def from_callable(cls, fn, dfn=None) -> "CircleLift":
        return cls("callable", fn=fn, dfn=dfn)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "rotation":
            return x + self.a
        if self.kind == "trig":
            y = x + self.a
            for k, c, d in zip(self.ks, self.cs, self.ds):
                y = y + c * np.sin(TWO_PI * k * x) + d * np.cos(TWO_PI * k * x)
            return y
        if self.kind == "sampled":
            return x + self._spline(x - np.floor(x))
        return np.asarray(self.fn(x), dtype=float)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "rotation":
            return np.ones_like(x)
        if self.kind == "trig":
            y = np.ones_like(x)
            for k, c, d in zip(self.ks, self.cs, self.ds):
                y = y + TWO_PI * k * (c * np.cos(TWO_PI * k * x) - d * np.sin(TWO_PI * k * x))
            return y
        if self.kind == "sampled":
            return 1.0 + self._spline(x - np.floor(x), 1)
        if self.dfn is not None:
            return np.asarray(self.dfn(x), dtype=float)
        h = 1e-6
        return (self(x + h) - self(x - h)) / (2 * h)

    def compose(self, other: "CircleLift") -> "CircleLift":
        """self o other."""
        return CircleLift.from_callable(lambda x: self(other(x)), lambda x: self.deriv(other(x)) * other.deriv(x))

    def inverse_eval(self, y, tol: float = 1e-15, maxit: int = 60):
        """g^-1(y) by safeguarded Newton (g is a monotone degree-one lift)."""
        y = np.asarray(y, dtype=float)
        x = y - (self(y) - y)
        for _ in range(maxit):
            r = self(x) - y
            step = r / self.deriv(x)
            x = x - np.clip(step, -0.5, 0.5)
            if np.max(np.abs(step)) <= tol * max(1.0, float(np.max(np.abs(x)))):
                break
        return x

    def validate(self, n_grid: int = 10000, tol: float = 1e-12) -> dict:
        x = np.arange(n_grid + 1) / n_grid
        gx = self(x)
        dmin = float(np.min(self.deriv(x)))
        mono = bool(np.all(np.diff(gx) > 0) and dmin > 0)
        rng = np.random.default_rng(0)
        s = rng.uniform(-3, 3, 50)
        per = float(np.max(np.abs(self(s + 1) - self(s) - 1)))
        if not mono:
            raise NotMonotone("lift is not strictly increasing", min_derivative=dmin)
        if per > tol:
            raise PreconditionFailed("lift is not degree one", periodicity_defect=per)
        return {"monotone": mono, "min_derivative": dmin, "periodicity_defect": per}

    def to_json(self) -> dict:
        if self.kind == "rotation":
            return {"kind": "rotation", "a": self.a}
        if self.kind == "trig":
            return {"kind": "trig", "a": self.a, "terms": [[k, c, d] for k, c, d in zip(self.ks, self.cs, self.ds)]}
        if self.kind == "sampled":
            return {"kind": "sampled", "nodes": self.nodes.tolist()}
        raise ValueError("callable lifts are not serializable")

    @classmethod
    def from_json(cls, obj: dict) -> "CircleLift":
        kind = obj["kind"]
        if kind == "rotation":
            return cls.rotation(obj["a"])
        if kind == "trig":
            return cls.trig(obj["a"], obj.get("terms", []))
        if kind == "sampled":
            return cls.sampled(obj["nodes"])
        raise ValueError(f"unknown circle lift kind {kind!r}")


def iterate_lift(g: CircleLift, x0, n: int, backend=None) -> np.ndarray:
    """g^n(x0), with the integer part accumulated separately."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if g.kind == "rotation":
        return x0 + n * g.a
    if g.kind == "trig":
        fr, ip = kernels.circle_orbit(g.a, g.ks, g.cs, g.ds, x0, n, backend)
        return ip + fr
    ip = np.floor(x0)
    fr = x0 - ip
    for _ in range(n):
        y = g(fr)
        fl = np.floor(y)
        fr = y - fl
        ip = ip + fl
    return ip + fr


def rotation_number(g: CircleLift, n: int = 100000, x0: float = 0.0, backend=None, check: bool = True) -> dict:
    """(g^n(x0) - x0) / n with the monotone-lift enclosure |rho - estimate| <= 1/n."""
    if check:
        g.validate()
    if g.kind == "rotation":
        return {"rho": g.a, "error_bound": 0.0, "n": n}
    y = iterate_lift(g, x0, n, backend)[0]
    return {"rho": (y - x0) / n, "error_bound": 1.0 / n, "n": n}


def _displacement_sign(g: CircleLift, q: int, p: int, grid: np.ndarray) -> int:
    d = iterate_lift(g, grid, q) - grid - p
    if np.all(d > 0):
        return 1
    if np.all(d < 0):
        return -1
    return 0


def rotation_number_farey(g: CircleLift, q_max: int = 2000, n_grid: int = 512) -> dict:
    """Stern-Brocot bracket for the rotation number, independent of the 1/n estimate.

    rho > p/q iff g^q(x) > x + p for all x; a sign change of g^q - id - p means rho = p/q.
    """
    x = np.arange(n_grid) / n_grid
    a = int(math.floor(float(g(np.array([0.0]))[0])))
    lo, hi = (a - 1, 1), (a + 2, 1)
    while True:
        p, q = lo[0] + hi[0], lo[1] + hi[1]
        if q > q_max:
            return {"lo": Fraction(*lo), "hi": Fraction(*hi), "exact": False,
                    "rho": 0.5 * (lo[0] / lo[1] + hi[0] / hi[1]), "width": hi[0] / hi[1] - lo[0] / lo[1]}
        s = _displacement_sign(g, q, p, x)
        if s == 0:
            r = Fraction(p, q)
            return {"lo": r, "hi": r, "exact": True, "rho": float(r), "width": 0.0}
        if s > 0:
            lo = (p, q)
        else:
            hi = (p, q)


# ---------------------------------------------------------------------------
# Circle conjugacy (KAM-type Newton)
# ---------------------------------------------------------------------------

@dataclass
class CircleConjugacy:
    """K = H^-1 as K(theta) = theta + sum of Fourier modes, with g(K(theta)) + sigma = K(theta + rho)."""
    rho: float
    coeffs: np.ndarray  # complex rfft coefficients of K - id on n_grid points
    n_grid: int
    sigma: float
    defect: float
    iterations: int
    history: list = field(default_factory=list)

    def _modes(self, theta):
        """Mode numbers, phases and real-synthesis weights (Nyquist counted once)."""
        k = np.arange(len(self.coeffs))
        ph = np.exp(2j * np.pi * np.multiply.outer(theta, k))
        w = np.where(k == 0, 1.0, 2.0)
        if self.n_grid % 2 == 0 and len(self.coeffs) == self.n_grid // 2 + 1:
            w[-1] = 1.0
        return k, ph, w

    def K(self, theta):
        theta = np.asarray(theta, dtype=float)
        _, ph, w = self._modes(theta)
        return theta + (ph * (w * self.coeffs)).real.sum(axis=-1) / self.n_grid

    def dK(self, theta):
        theta = np.asarray(theta, dtype=float)
        k, ph, w = self._modes(theta)
        return 1.0 + (ph * (w * self.coeffs * 2j * np.pi * k)).real.sum(axis=-1) / self.n_grid

    def H(self, x, tol: float = 1e-15, maxit: int = 60):
        """H = K^-1 by Newton."""
        x = np.asarray(x, dtype=float)
        th = x.copy()
        for _ in range(maxit):
            step = (self.K(th) - x) / self.dK(th)
            th = th - step
            if np.max(np.abs(step), initial=0.0) <= tol * max(1.0, float(np.max(np.abs(th), initial=0.0))):
                break
        return th

    def to_json(self) -> dict:
        return {"rho": self.rho, "n_grid": self.n_grid, "sigma": self.sigma, "defect": self.defect,
                "iterations": self.iterations, "coeffs_re": self.coeffs.real.tolist(),
                "coeffs_im": self.coeffs.imag.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "CircleConjugacy":
        return cls(obj["rho"], np.asarray(obj["coeffs_re"]) + 1j * np.asarray(obj["coeffs_im"]), obj["n_grid"],
                   obj["sigma"], obj["defect"], obj["iterations"])


def circle_conjugacy(g: CircleLift, rho: float | QuadNum, n_modes: int = 256, n_iters: int = 40,
                     tol: float = 1e-13, adjust_parameter: bool = False, check_rotation: bool = True,
                     n_rot: int = 100000) -> CircleConjugacy:
    """Conjugate g to the rotation by rho.

    With ``adjust_parameter`` a constant sigma is solved for so that g + sigma is
    conjugate to R_rho (Moser's modifying term); sigma is reported.  The defect
    is sup |H(g(x)) - H(x) - rho| over a fine grid.
    """
    if isinstance(rho, QuadNum):
        from .exact_linalg import continued_fraction_quadratic
        cf = continued_fraction_quadratic(rho)
        if cf.max_quotient > 10 ** 6:
            raise SmallDivisorOverflow("partial quotients too large", max_quotient=cf.max_quotient)
        rho = float(rho)
    rho = float(rho)
    k = np.arange(1, n_modes + 1)
    div = np.exp(2j * np.pi * k * rho) - 1.0
    if np.min(np.abs(div)) < 1e-12:
        bad = int(k[np.argmin(np.abs(div))])
        raise SmallDivisorOverflow("mode divisor below 1e-12", mode=bad, rho=rho)
    if check_rotation and not adjust_parameter:
        r = rotation_number(g, n_rot)
        if abs(r["rho"] - rho) > r["error_bound"] + 1e-12:
            raise PreconditionFailed("rotation number of g does not match rho", estimate=r["rho"], rho=rho,
                                     error_bound=r["error_bound"])
    M = 4 * n_modes
    th = np.arange(M) / M
    kk = np.arange(M // 2 + 1)
    shift = np.exp(2j * np.pi * kk * rho)
    divfull = shift - 1.0
    divfull[0] = 1.0
    mask = (kk <= n_modes).astype(float)
    c = np.zeros(M // 2 + 1, dtype=complex)  # K - id
    sigma = 0.0
    history = []
    it = 0
    for it in range(1, n_iters + 1):
        kvals = np.fft.irfft(c, M)
        K = th + kvals
        dK = 1.0 + np.fft.irfft(c * 2j * np.pi * kk, M)
        K_shift = th + rho + np.fft.irfft(c * shift, M)
        dK_shift = 1.0 + np.fft.irfft(c * shift * 2j * np.pi * kk, M)
        E = g(K) + sigma - K_shift
        err = float(np.max(np.abs(E)))
        history.append(err)
        if err < tol:
            break
        if adjust_parameter:
            dsig = -np.mean(E / dK_shift) / np.mean(1.0 / dK_shift)
        else:
            dsig = 0.0
        R = (E + dsig) / dK_shift
        Rh = np.fft.rfft(R)
        Wh = Rh / divfull
        Wh[0] = 0.0
        W = np.fft.irfft(Wh * mask, M)
        c = c + np.fft.rfft(dK * W) * mask
        sigma += dsig
    conj = CircleConjugacy(rho, c, M, sigma, math.nan, it, history)
    conj.defect = conjugacy_defect(g, conj)
    return conj


def conjugacy_defect(g: CircleLift, conj: CircleConjugacy, n: int = 4096) -> float:
    """sup |H(g(x) + sigma) - H(x) - rho| on a grid of x in [0, 1)."""
    x = np.arange(n) / n
    return float(np.max(np.abs(conj.H(g(x) + conj.sigma) - conj.H(x) - conj.rho)))


# ---------------------------------------------------------------------------
# Interval maps on a leaf and the translation structure
# ---------------------------------------------------------------------------

@dataclass
class IntervalMap:
    """Increasing map of a leaf parameter (vectorized), with optional inverse and derivative."""
    fn: Callable
    inv: Callable | None = None
    dfn: Callable | None = None

    def __call__(self, s):
        return np.asarray(self.fn(np.asarray(s, dtype=float)), dtype=float)

    def inverse(self, s):
        if self.inv is not None:
            return np.asarray(self.inv(np.asarray(s, dtype=float)), dtype=float)
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty_like(s)
        for i, y in enumerate(s):
            lo, hi = y - 1.0, y + 1.0
            while self(np.array([lo]))[0] > y:
                lo -= 2 * (hi - lo)
            while self(np.array([hi]))[0] < y:
                hi += 2 * (hi - lo)
            out[i] = brentq(lambda x: self(np.array([x]))[0] - y, lo, hi, xtol=1e-15, rtol=4e-16)
        return out

    def deriv(self, s):
        s = np.asarray(s, dtype=float)
        if self.dfn is not None:
            return np.asarray(self.dfn(s), dtype=float)
        h = 1e-6
        return (self(s + h) - self(s - h)) / (2 * h)


def leaf_translation(a: float) -> IntervalMap:
    return IntervalMap(lambda s: s + a, lambda s: s - a, lambda s: np.ones_like(s))


def leaf_scaling(lam: float) -> IntervalMap:
    return IntervalMap(lambda s: lam * s, lambda s: s / lam, lambda s: np.full_like(s, lam))


@dataclass(frozen=True)
class LeafChange:
    """Smooth increasing leaf coordinate change phi(s) = s + eta sin(2 pi s / period)."""
    eta: float
    period: float

    def __post_init__(self):
        if abs(self.eta) * TWO_PI / self.period >= 1:
            raise PreconditionFailed("coordinate change is not monotone")

    def phi(self, s):
        return s + self.eta * np.sin(TWO_PI * s / self.period)

    def dphi(self, s):
        return 1.0 + self.eta * TWO_PI / self.period * np.cos(TWO_PI * s / self.period)

    def phi_inv(self, y, tol=1e-15):
        y = np.asarray(y, dtype=float)
        s = y.copy()
        for _ in range(60):
            step = (self.phi(s) - y) / self.dphi(s)
            s = s - step
            if np.max(np.abs(step), initial=0.0) <= tol * max(1.0, float(np.max(np.abs(s), initial=0.0))):
                break
        return s

    def conjugate(self, F: IntervalMap) -> IntervalMap:
        """phi^-1 o F o phi."""
        return IntervalMap(lambda s: self.phi_inv(F(self.phi(s))),
                           lambda s: self.phi_inv(F.inverse(self.phi(s))),
                           lambda s: F.deriv(self.phi(s)) * self.dphi(s) / self.dphi(self.phi_inv(F(self.phi(s)))))


@dataclass
class LeafAction:
    """Two commuting increasing maps of a leaf interval, optionally with the ambient
    Anosov map restricted to the leaf and its expanding eigenvalue lam_B."""
    f1: IntervalMap
    f2: IntervalMap
    B: IntMatrix2
    interval: tuple = (-math.inf, math.inf)
    ambient: IntervalMap | None = None
    p0: float = 0.0


def affine_leaf_action(A, B, c1: float = 1.0) -> tuple[LeafAction, dict]:
    """Leaf picture of the affine action rho = c1 u_A (x) u_{B^t} on the unstable line of A through 0.

    The leaf parameter is arclength along the unit unstable vector of A.
    """
    A = A if isinstance(A, IntMatrix2) else IntMatrix2(A)
    B = B if isinstance(B, IntMatrix2) else IntMatrix2(B)
    if A.trace != B.trace:
        raise PreconditionFailed("the eigen kernel needs tr A = tr B")
    eA, eBt = eigen_data(A), eigen_data(B.T)
    uA = np.array([float(v) for v in eA.u])
    nA = float(np.linalg.norm(uA))
    uBt = np.array([float(v) for v in eBt.u])
    a = c1 * uBt * nA
    lam = float(eA.lam)
    act = LeafAction(leaf_translation(a[0]), leaf_translation(a[1]), B, ambient=leaf_scaling(lam))
    return act, {"translations": a.tolist(), "u_A": (uA / nA).tolist(), "lam": lam}


def conjugated_leaf_action(action: LeafAction, eta: float) -> tuple[LeafAction, LeafChange]:
    """Conjugate an affine leaf action by phi(s) = s + eta sin(2 pi s / a1), a1 = f1 translation."""
    a1 = float(action.f1(np.array([0.0]))[0])
    ch = LeafChange(eta, a1)
    amb = ch.conjugate(action.ambient) if action.ambient is not None else None
    return LeafAction(ch.conjugate(action.f1), ch.conjugate(action.f2), action.B, action.interval, amb,
                      action.p0), ch


def unstable_slope_Bt(B: IntMatrix2) -> QuadNum:
    """c with (1, c) spanning the expanding eigenline of B^t."""
    e = eigen_data(B.T)
    return e.u[1] / e.u[0]


def _fixed_point_scan(f: IntervalMap, lo: float, hi: float, n: int = 2001):
    s = np.linspace(lo, hi, n)
    d = f(s) - s
    if np.any(d == 0):
        return float(s[np.nonzero(d == 0)[0][0]]), d
    idx = np.nonzero(np.sign(d[:-1]) != np.sign(d[1:]))[0]
    if len(idx):
        i = int(idx[0])
        return float(brentq(lambda x: f(np.array([x]))[0] - x, s[i], s[i + 1])), d
    return None, d


class FundamentalChart:
    """theta: leaf -> R with theta(f1^m(p0)) = m, linear on [p0, f1(p0)]."""

    def __init__(self, f1: IntervalMap, p0: float):
        self.f1 = f1
        self.p0 = float(p0)
        self.p1 = float(f1(np.array([p0]))[0])
        if self.p1 == self.p0:
            raise FixedPointPresent("f1 fixes the base point", point=self.p0)
        self.orient = 1.0 if self.p1 > self.p0 else -1.0

    def theta(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float)).copy()
        m = np.zeros_like(s)
        o = self.orient
        for _ in range(100000):
            ahead = o * (s - self.p1) >= 0
            behind = o * (s - self.p0) < 0
            if not (ahead.any() or behind.any()):
                break
            if ahead.any():
                s[ahead] = self.f1.inverse(s[ahead])
                m[ahead] += 1
            if behind.any():
                s[behind] = self.f1(s[behind])
                m[behind] -= 1
        return m + (s - self.p0) / (self.p1 - self.p0)

    def theta_inv(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        m = np.floor(u)
        s = self.p0 + (u - m) * (self.p1 - self.p0)
        for _ in range(100000):
            pos, neg = m > 0, m < 0
            if not (pos.any() or neg.any()):
                break
            if pos.any():
                s[pos] = self.f1(s[pos])
                m[pos] -= 1
            if neg.any():
                s[neg] = self.f1.inverse(s[neg])
                m[neg] += 1
        return s

    def induced(self, f2: IntervalMap) -> CircleLift:
        """The circle map theta o f2 o theta^-1 as a degree-one lift."""
        return CircleLift.from_callable(lambda u: self.theta(f2(self.theta_inv(u))))


def weighted_birkhoff(values) -> float:
    """Birkhoff average with the smooth bump weight exp(-1/(t(1-t))); converges faster
    than any power of 1/n along orbits smoothly conjugate to a rotation."""
    v = np.asarray(values, dtype=float)
    t = (np.arange(len(v)) + 0.5) / len(v)
    w = np.exp(-1.0 / (t * (1.0 - t)))
    return float(np.sum(w * v) / np.sum(w))


def leaf_translation_structure(action: LeafAction, n: int = 4000, n_powers: int = 30,
                               tol: float = 1e-6) -> dict:
    """Translation number c of f2 measured in f1 steps and the check that (1, c)
    spans the expanding eigenline of B^t, via |B^-n applied as in the lemma| for n <= n_powers."""
    lo, hi = action.interval
    lo = action.p0 - 50.0 if not math.isfinite(lo) else lo
    hi = action.p0 + 50.0 if not math.isfinite(hi) else hi
    fp, _ = _fixed_point_scan(action.f1, lo, hi)
    if fp is not None:
        raise FixedPointPresent("f1 has a fixed point in the interval", point=fp)
    chart = FundamentalChart(action.f1, action.p0)
    # orbit of the induced circle map, as a lift in f1-step units
    y = np.array([action.p0])
    k = 0
    o = chart.orient
    u = np.empty(n + 1)
    u[0] = 0.0
    for j in range(1, n + 1):
        y = action.f2(y)
        while o * (y[0] - chart.p1) >= 0:
            y = action.f1.inverse(y)
            k += 1
        while o * (y[0] - chart.p0) < 0:
            y = action.f1(y)
            k -= 1
        u[j] = k + (y[0] - chart.p0) / (chart.p1 - chart.p0)
    c_plain = u[-1] / n
    c = weighted_birkhoff(np.diff(u))
    cB = unstable_slope_Bt(action.B)
    Binv = action.B.inverse()
    norms = []
    P = IntMatrix2([[1, 0], [0, 1]])
    for _ in range(n_powers):
        P = P @ Binv
        (an, bn), (cn, dn) = P.rows
        norms.append(math.hypot(an + c * cn, bn + c * dn))
    dist = abs(c - float(cB))
    return {"c": c, "c_plain": c_plain, "plain_error_bound": 1.0 / n, "c_unstable_Bt": float(cB),
            "distance": dist, "check": dist < tol, "powers_norms": norms}


# ---------------------------------------------------------------------------
# Leaf flow
# ---------------------------------------------------------------------------

@dataclass
class LeafFlow:
    """g_t(p) = theta^-1(K(K^-1(theta(p)) + t)) on the leaf."""
    chart: FundamentalChart
    conj: CircleConjugacy
    c: float
    lam: float | None = None
    ambient: IntervalMap | None = None
    report: dict = field(default_factory=dict)

    def __call__(self, t, s):
        th = self.chart.theta(s)
        return self.chart.theta_inv(self.conj.K(self.conj.H(th) + t))

    def h(self, s):
        """Leaf coordinate in which f1 = +1 and f2 = +c."""
        return self.conj.H(self.chart.theta(s))

    def vector_field(self, s, dt: float):
        """X = d/dt g_t at t = 0 by forward differences with one Richardson step."""
        s = np.asarray(s, dtype=float)
        D1 = (self(dt, s) - s) / dt
        D2 = (self(dt / 2, s) - s) / (dt / 2)
        return 2 * D2 - D1

    def to_json(self) -> dict:
        return {"c": self.c, "lambda": self.lam, "p0": self.chart.p0, "p1": self.chart.p1,
                "conjugacy": self.conj.to_json(), "report": self.report}


def flow_embedding(action: LeafAction, h_circle: CircleConjugacy | None = None, n_samples: int = 64,
                   seed: int = 0, tol: float = 1e-5, n_modes: int = 64) -> LeafFlow:
    """Embed the commuting pair into a flow with g_1 = f1, g_c = f2 and, when the ambient
    map is supplied, check ambient o g_t o ambient^-1 = g_{lam t}."""
    chart = FundamentalChart(action.f1, action.p0)
    cB = float(unstable_slope_Bt(action.B))
    if h_circle is None:
        circ = chart.induced(action.f2)
        h_circle = circle_conjugacy(circ, cB, n_modes=n_modes, check_rotation=False)
    if h_circle.defect > 1e-6:
        raise PreconditionFailed("circle conjugacy defect too large", defect=h_circle.defect)
    lam = float(eigen_data(action.B).lam)
    flow = LeafFlow(chart, h_circle, h_circle.rho, lam, action.ambient)
    rng = np.random.default_rng(seed)
    span = abs(chart.p1 - chart.p0)
    S = chart.p0 + rng.uniform(-2, 2, n_samples) * span
    e1 = float(np.max(np.abs(flow(1.0, S) - action.f1(S))))
    e2 = float(np.max(np.abs(flow(flow.c, S) - action.f2(S))))
    e0 = float(np.max(np.abs(flow(0.0, S) - S)))
    rep = {"g1_vs_f1": e1, "gc_vs_f2": e2, "g0_vs_id": e0}
    worst = max(e1, e2, e0)
    if action.ambient is not None:
        T = rng.uniform(-1, 1, n_samples)
        L = action.ambient
        lhs = L(flow(T, L.inverse(S)))
        rhs = flow(lam * T, S)
        rep["renormalization"] = float(np.max(np.abs(lhs - rhs)))
        worst = max(worst, rep["renormalization"])
    flow.report = rep
    if worst > tol:
        raise EmbeddingMismatch("flow does not reproduce the action", **rep)
    return flow


def flow_property_defect(flow: LeafFlow, n_pairs: int = 20, n_points: int = 32, seed: int = 0) -> float:
    """max |g_{s+t}(p) - g_s(g_t(p))| over random (s, t) and points."""
    rng = np.random.default_rng(seed)
    span = abs(flow.chart.p1 - flow.chart.p0)
    P = flow.chart.p0 + rng.uniform(-2, 2, n_points) * span
    out = 0.0
    for s, t in rng.uniform(-2, 2, (n_pairs, 2)):
        out = max(out, float(np.max(np.abs(flow(s + t, P) - flow(s, flow(t, P))))))
    return out


def vector_field_eigencheck(flow: LeafFlow, f: IntervalMap | None = None, dt: float = 1e-4,
                            n_samples: int = 64, seed: int = 0) -> dict:
    """max |f'(p) X(p) - lam X(f(p))| with X from finite differences of the flow."""
    f = f or flow.ambient
    if f is None:
        raise PreconditionFailed("an ambient map on the leaf is required")
    rng = np.random.default_rng(seed)
    span = abs(flow.chart.p1 - flow.chart.p0)
    S = flow.chart.p0 + rng.uniform(-1, 1, n_samples) * span
    X = flow.vector_field(S, dt)
    XF = flow.vector_field(f(S), dt)
    res = np.abs(f.deriv(S) * X - flow.lam * XF)
    return {"max_residual": float(res.max()), "dt": dt, "n_samples": n_samples}
