"""Stable/unstable splittings, periodic points, the transversality dichotomy,
the inclination lemma check and the ping-pong certifier."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import (ConeCriterionFailed, EmptyResult, Inconclusive, LostTransversality,
                     ManifoldTrackingLoss, NoValidN, PreconditionFailed)
from .exact_linalg import IntMatrix2, eigen_data
from .torus_maps import Compose, TorusLift

EPS_FLOOR = 1e-15


def _unit(V):
    V = np.asarray(V, dtype=float)
    return V / np.linalg.norm(V, axis=-1, keepdims=True)


def _orient(V, ref):
    """Flip rows of V so that they have a nonnegative dot with ``ref``."""
    s = np.sign(V @ ref)
    s[s == 0] = 1
    return V * s[:, None]


def line_angle(U, V):
    """Angle in [0, pi/2] between the lines spanned by rows of U and V."""
    U, V = _unit(U), _unit(V)
    c = np.abs(np.sum(U * V, axis=-1))
    s = np.abs(U[..., 0] * V[..., 1] - U[..., 1] * V[..., 0])
    return np.arctan2(s, c)


def linear_frame(A) -> tuple[np.ndarray, np.ndarray, float]:
    """Float unit unstable/stable eigenvectors and the expanding eigenvalue of an Anosov matrix."""
    e = eigen_data(A)
    u = _unit(np.array([float(v) for v in e.u]))
    s = _unit(np.array([float(v) for v in e.u_inv]))
    return u, s, float(e.lam)


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

def splitting_at(f: TorusLift, X, depth: int = 40, f_inv: TorusLift | None = None):
    """E_u, E_s at points X by pushing along backward/forward orbits.

    Returns (Eu, Es, defect_u, defect_s), the defects being the angle change
    between pushes of length depth - 1 and depth.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    A = f.linear_part
    try:
        u0, s0, _ = linear_frame(A)
    except Exception:
        u0, s0 = _unit(np.array([1.0, 0.3819660112501051])), _unit(np.array([-0.3819660112501051, 1.0]))
    f_inv = f_inv or f.inverse()
    N = X.shape[0]
    # backward orbit x_{-depth}, ..., x_{-1}
    back = [X]
    for _ in range(depth):
        back.append(f_inv(back[-1]) % 1.0)
    v_long = np.tile(u0, (N, 1))
    v_short = np.tile(u0, (N, 1))
    for k in range(depth, 0, -1):
        _, J = f.jacobian(back[k])
        v_long = _unit(np.einsum("nij,nj->ni", J, v_long))
        if k <= depth - 1:
            v_short = _unit(np.einsum("nij,nj->ni", J, v_short))
    Eu = _orient(v_long, u0)
    du = line_angle(v_long, v_short)
    # forward orbit x_0 .. x_{depth-1}; pull back with DF^-1
    fwd = [X]
    for _ in range(depth - 1):
        fwd.append(f(fwd[-1]) % 1.0)
    w_long = np.tile(s0, (N, 1))
    w_short = np.tile(s0, (N, 1))
    for k in range(depth - 1, -1, -1):
        _, J = f.jacobian(fwd[k])
        Ji = np.linalg.inv(J)
        w_long = _unit(np.einsum("nij,nj->ni", Ji, w_long))
        if k <= depth - 2:
            w_short = _unit(np.einsum("nij,nj->ni", Ji, w_short))
    Es = _orient(w_long, s0)
    ds = line_angle(w_long, w_short)
    return Eu, Es, du, ds


@dataclass
class SplittingField:
    resolution: int
    Eu: np.ndarray  # (N, N, 2)
    Es: np.ndarray
    iteration_depth: int
    defect: float
    min_angle: float
    expansion_rate: float
    contraction_rate: float
    cone_invariant: bool
    invariance_error: float

    def to_json(self) -> dict:
        return {"resolution": self.resolution, "iteration_depth": self.iteration_depth, "defect": self.defect,
                "min_angle": self.min_angle, "expansion_rate": self.expansion_rate,
                "contraction_rate": self.contraction_rate, "cone_invariant": self.cone_invariant,
                "invariance_error": self.invariance_error}


def grid_points(N: int) -> np.ndarray:
    g = np.arange(N) / N
    return np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)


def compute_splitting(f: TorusLift, grid_resolution: int = 64, depth: int = 40, rate_steps: int = 5,
                      f_inv: TorusLift | None = None) -> SplittingField:
    """Cone-iteration splitting on a grid with an expansion/contraction certificate."""
    X = grid_points(grid_resolution)
    Eu, Es, du, ds = splitting_at(f, X, depth, f_inv)
    defect = max(float(du.max()), float(ds.max()), EPS_FLOOR)
    min_angle = float(line_angle(Eu, Es).min())
    # m-step growth of E_u and E_s along orbits
    gu = np.zeros(len(X))
    gs = np.zeros(len(X))
    vu, vs, Y = Eu.copy(), Es.copy(), X.copy()
    for _ in range(rate_steps):
        Y2, J = f.jacobian(Y)
        vu = np.einsum("nij,nj->ni", J, vu)
        vs = np.einsum("nij,nj->ni", J, vs)
        nu, ns = np.linalg.norm(vu, axis=1), np.linalg.norm(vs, axis=1)
        gu += np.log(nu)
        gs += np.log(ns)
        vu /= nu[:, None]
        vs /= ns[:, None]
        Y = Y2 % 1.0
    exp_rate = float(np.exp(gu.min() / rate_steps))
    con_rate = float(np.exp(gs.max() / rate_steps))
    # invariance: Df E_u(x) parallel to E_u(f x)
    FX, J = f.jacobian(X)
    EuF, EsF, _, _ = splitting_at(f, FX % 1.0, depth, f_inv)
    inv_err = float(max(line_angle(np.einsum("nij,nj->ni", J, Eu), EuF).max(),
                        line_angle(np.einsum("nij,nj->ni", J, Es), EsF).max()))
    # cone test: half-angle = min_angle / 3 around E_u maps into itself
    half = min_angle / 3.0
    cone_ok = True
    for sgn in (-1.0, 1.0):
        c, s = math.cos(sgn * half), math.sin(sgn * half)
        edge = np.stack([c * Eu[:, 0] - s * Eu[:, 1], s * Eu[:, 0] + c * Eu[:, 1]], axis=1)
        img = np.einsum("nij,nj->ni", J, edge)
        if np.any(line_angle(img, EuF) > half + 1e-12):
            cone_ok = False
    if not (exp_rate > 1.0 + 1e-9 and con_rate < 1.0 - 1e-9 and min_angle > 1e-9):
        raise ConeCriterionFailed("no uniform expansion/contraction observed",
                                  expansion_rate=exp_rate, contraction_rate=con_rate, min_angle=min_angle)
    n = grid_resolution
    return SplittingField(n, Eu.reshape(n, n, 2), Es.reshape(n, n, 2), depth, defect, min_angle,
                          exp_rate, con_rate, cone_ok, inv_err)


def verify_anosov(f: TorusLift, resolution: int = 24, depth: int = 20) -> SplittingField:
    """Cheap Anosov certificate used as a precondition by other modules."""
    A = f.linear_part
    if not A.is_anosov:
        raise ConeCriterionFailed("linear part is not Anosov", linear_part=A.tolist())
    return compute_splitting(f, resolution, depth)


def expansion_along_orbits(f: TorusLift, n_orbits: int = 100, length: int = 50, seed: int = 0,
                           depth: int = 30) -> np.ndarray:
    """log |Df^n restricted to E_u| / n along sampled orbits (one value per orbit)."""
    rng = np.random.default_rng(seed)
    X = rng.random((n_orbits, 2))
    Eu, _, _, _ = splitting_at(f, X, depth)
    v, Y, acc = Eu.copy(), X.copy(), np.zeros(n_orbits)
    for _ in range(length):
        Y2, J = f.jacobian(Y)
        v = np.einsum("nij,nj->ni", J, v)
        nv = np.linalg.norm(v, axis=1)
        acc += np.log(nv)
        v /= nv[:, None]
        Y = Y2 % 1.0
    return acc / length


# ---------------------------------------------------------------------------
# Periodic points
# ---------------------------------------------------------------------------

def linear_periodic_seeds(A, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact fixed points of A^q on the torus: x = (A^q - I)^-1 m mod 1, with integers m = A^q x - x."""
    A = IntMatrix2(A.rows) if isinstance(A, IntMatrix2) else IntMatrix2(A)
    P = A ** q
    (a, b), (c, d) = P.rows
    a, d = a - 1, d - 1
    D = a * d - b * c
    if D == 0:
        raise PreconditionFailed("A^q - I is singular", q=q)
    adj = ((d, -b), (-c, a))
    Dm = abs(D)
    seen = set()
    pts, ms = [], []
    for m0 in range(Dm):
        for m1 in range(Dm):
            num = (adj[0][0] * m0 + adj[0][1] * m1, adj[1][0] * m0 + adj[1][1] * m1)
            key = (num[0] * (1 if D > 0 else -1) % Dm, num[1] * (1 if D > 0 else -1) % Dm)
            if key in seen:
                continue
            seen.add(key)
            x = (key[0] / Dm, key[1] / Dm)
            pts.append(x)
            # integer m with (A^q - I) x = m for the reduced representative
            mm = (a * key[0] + b * key[1], c * key[0] + d * key[1])
            ms.append((mm[0] // Dm, mm[1] // Dm))
            if len(seen) == Dm:
                return np.array(pts), np.array(ms)
    return np.array(pts), np.array(ms)


def periodic_points(f: TorusLift, q: int = 1, tol: float = 1e-12, max_newton: int = 40,
                    verify: bool = True) -> list[dict]:
    """Newton continuation of the fixed points of A^q to fixed points of f^q.

    Each entry has x (in [0,1)^2), the integer k with F^q(x) = x + k, the
    eigenvalues of DF^q(x) and the seed it was continued from.
    """
    if verify:
        verify_anosov(f)
    A = f.linear_part
    seeds, _ = linear_periodic_seeds(A, q)
    Fq = f.power(q)
    roots, failures = [], []
    for x0 in seeds:
        x = x0.copy()
        k = np.round(Fq(x[None])[0] - x)
        ok = False
        for _ in range(max_newton):
            y, J = Fq.jacobian(x[None])
            G = y[0] - x - k
            if np.max(np.abs(G)) < tol:
                ok = True
                break
            dx = np.linalg.solve(J[0] - np.eye(2), G)
            x = x - dx
        if not ok:
            failures.append(x0.tolist())
            continue
        _, J = Fq.jacobian(x[None])
        ev = np.linalg.eigvals(J[0])
        ev = ev[np.argsort(-np.abs(ev))]
        xr = x % 1.0
        kk = np.round(Fq(xr[None])[0] - xr).astype(int)
        dup = any(np.max(np.abs(((r["x"] - xr) + 0.5) % 1.0 - 0.5)) < 1e-9 for r in roots)
        if not dup:
            roots.append({"x": xr, "k": tuple(int(v) for v in kk), "eigenvalues": ev.real if np.all(np.isreal(ev)) else ev,
                          "seed": x0})
    if not roots:
        raise EmptyResult("no periodic point found", q=q, failures=failures)
    if failures:
        roots[0]["newton_failures"] = failures
    return roots


# ---------------------------------------------------------------------------
# Transversality dichotomy
# ---------------------------------------------------------------------------

ANGLE_NAMES = ("s_to_s", "s_to_u", "u_to_s", "u_to_u")


@dataclass
class TransversalityReport:
    angles: np.ndarray  # (n, 4) in ANGLE_NAMES order
    samples: np.ndarray
    minima: dict
    maxima: dict
    classification: str  # "Branch1" | "Branch2"
    preserved: list = field(default_factory=list)  # for Branch1
    witness: np.ndarray | None = None  # for Branch2
    witness_angles: np.ndarray | None = None
    angle_threshold: float = 1e-3
    collapse_threshold: float = 1e-6

    def to_json(self) -> dict:
        return {"classification": self.classification, "preserved": self.preserved,
                "witness": None if self.witness is None else self.witness.tolist(),
                "witness_angles": None if self.witness_angles is None else dict(zip(ANGLE_NAMES, self.witness_angles.tolist())),
                "minima": self.minima, "maxima": self.maxima,
                "angle_threshold": self.angle_threshold, "collapse_threshold": self.collapse_threshold,
                "n_samples": int(len(self.samples))}


def transversality_angles(f: TorusLift, h: TorusLift, X, depth: int = 40):
    """Angles between Dh E^{s,u}(x) and E^{s,u}(h x), columns in ANGLE_NAMES order."""
    X = np.atleast_2d(X)
    Eu, Es, _, _ = splitting_at(f, X, depth)
    HX, Dh = h.jacobian(X)
    EuH, EsH, _, _ = splitting_at(f, np.atleast_2d(HX) % 1.0, depth)
    DEs = np.einsum("nij,nj->ni", Dh, Es)
    DEu = np.einsum("nij,nj->ni", Dh, Eu)
    return np.stack([line_angle(DEs, EsH), line_angle(DEs, EuH), line_angle(DEu, EsH), line_angle(DEu, EuH)], axis=1)


def transversality_report(f: TorusLift, h: TorusLift, n_samples: int = 256, seed: int = 0,
                          angle_threshold: float = 1e-3, collapse_threshold: float = 1e-6,
                          depth: int = 40) -> TransversalityReport:
    """Decide between 'h preserves a foliation' and 'h has a fully transverse point'."""
    rng = np.random.default_rng(seed)
    X = rng.random((n_samples, 2))
    ang = transversality_angles(f, h, X, depth)
    mins = {n: float(ang[:, i].min()) for i, n in enumerate(ANGLE_NAMES)}
    maxs = {n: float(ang[:, i].max()) for i, n in enumerate(ANGLE_NAMES)}
    preserved = [n for i, n in enumerate(ANGLE_NAMES) if ang[:, i].max() < collapse_threshold]
    if preserved:
        return TransversalityReport(ang, X, mins, maxs, "Branch1", preserved,
                                    angle_threshold=angle_threshold, collapse_threshold=collapse_threshold)
    score = ang.min(axis=1)
    i = int(np.argmax(score))
    if score[i] > angle_threshold:
        return TransversalityReport(ang, X, mins, maxs, "Branch2", [], X[i], ang[i],
                                    angle_threshold, collapse_threshold)
    raise Inconclusive("neither branch criterion met", best_min_angle=float(score[i]), best_sample=X[i],
                       maxima=maxs)


# ---------------------------------------------------------------------------
# Adapted charts and curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdaptedChart:
    """x = p + xi e_u + eta e_s."""
    p: np.ndarray
    eu: np.ndarray
    es: np.ndarray

    @property
    def frame(self) -> np.ndarray:
        return np.stack([self.eu, self.es], axis=1)

    def to_chart(self, X) -> np.ndarray:
        return np.linalg.solve(self.frame, (np.atleast_2d(X) - self.p).T).T

    def from_chart(self, C) -> np.ndarray:
        return np.atleast_2d(C) @ self.frame.T + self.p


def chart_at(f: TorusLift, p, depth: int = 40) -> AdaptedChart:
    Eu, Es, _, _ = splitting_at(f, np.asarray(p, dtype=float)[None] % 1.0, depth)
    return AdaptedChart(np.asarray(p, dtype=float), Eu[0], Es[0])


def resample_curve(P: np.ndarray, T: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Resample a curve (points P, tangents T) to n points equally spaced in arclength
    with cubic Hermite interpolation."""
    seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
    keep = np.concatenate([[True], seg > 1e-300])
    P, T = P[keep], T[keep]
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(P, axis=0), axis=1))])
    if s[-1] <= 0 or len(P) < 2:
        return P, T
    Tu = _unit(T)
    # orient tangents along the parametrization direction
    fwd = np.gradient(P, s, axis=0)
    Tu = Tu * np.sign(np.sum(Tu * fwd, axis=1, keepdims=True) + 1e-300)
    spl = CubicHermiteSpline(s, P, Tu, axis=0)
    si = np.linspace(0.0, s[-1], n)
    Pi = spl(si)
    Ti = _unit(spl.derivative()(si))
    return Pi, Ti


def _component_through(mask: np.ndarray, idx: int) -> tuple[int, int]:
    lo = idx
    while lo > 0 and mask[lo - 1]:
        lo -= 1
    hi = idx
    while hi < len(mask) - 1 and mask[hi + 1]:
        hi += 1
    return lo, hi


def clip_curve(P, T, inside, anchor_idx):
    """Keep the connected run of points with ``inside`` true containing ``anchor_idx``."""
    if not inside[anchor_idx]:
        return None
    lo, hi = _component_through(inside, anchor_idx)
    return P[lo:hi + 1], T[lo:hi + 1]


def c1_distance_to_graph(chart: AdaptedChart, P, T, graph_xi, graph_eta, graph_slope, delta):
    """max over curve samples with |xi| <= delta of |d eta| + |d angle| against a graph eta = g(xi)."""
    C = chart.to_chart(P)
    Tc = np.linalg.solve(chart.frame, T.T).T
    sel = np.abs(C[:, 0]) <= delta
    if not np.any(sel):
        return math.inf
    xi, eta = C[sel, 0], C[sel, 1]
    ang = np.arctan2(Tc[sel, 1], Tc[sel, 0])
    ang = (ang + np.pi / 2) % np.pi - np.pi / 2
    g = np.interp(xi, graph_xi, graph_eta)
    ga = np.arctan(np.interp(xi, graph_xi, graph_slope))
    da = np.abs((ang - ga + np.pi / 2) % np.pi - np.pi / 2)
    return float(np.max(np.abs(eta - g) + da))


def local_unstable_graph(f: TorusLift, chart: AdaptedChart, k: np.ndarray, delta: float,
                         steps: int = 30, n: int = 401, inverse: bool = False):
    """Local unstable manifold of a fixed point (stable with ``inverse``) as a graph
    over its chart axis, by iterating a tiny segment along the eigendirection.

    Returns (axis coordinate, other coordinate, slope d other / d axis), sorted.
    """
    g = f.inverse() if inverse else f
    ax = chart.es if inverse else chart.eu
    _, J = f.jacobian(chart.p[None])
    lam = np.abs(np.linalg.eigvals(J[0])).max()
    r0 = 4.0 * delta * lam ** (-steps)
    s = np.linspace(-r0, r0, n)
    P = chart.p + s[:, None] * ax
    T = np.tile(ax, (n, 1))
    a, b = (1, 0) if inverse else (0, 1)
    for _ in range(steps):
        # F(p) = p + k, so F^-1(y + k) = p at y = p
        Q, Jq = g.jacobian(P + k) if inverse else g.jacobian(P)
        Q = np.atleast_2d(Q) if inverse else np.atleast_2d(Q) - k
        T = _unit(np.einsum("nij,nj->ni", Jq, T))
        C = chart.to_chart(Q)
        inside = np.abs(C[:, a]) <= 1.5 * delta
        anchor = int(np.argmin(np.linalg.norm(Q - chart.p, axis=1)))
        cut = clip_curve(Q, T, inside, anchor)
        if cut is None:
            raise ManifoldTrackingLoss("local manifold left the chart")
        P, T = resample_curve(*cut, n)
    C = chart.to_chart(P)
    Tc = np.linalg.solve(chart.frame, T.T).T
    order = np.argsort(C[:, a])
    return C[order, a], C[order, b], Tc[order, b] / Tc[order, a]


# ---------------------------------------------------------------------------
# Inclination lemma
# ---------------------------------------------------------------------------

def inclination_check(f: TorusLift, p, D, n: int = 20, delta: float = 0.05, n_points: int = 801,
                      transversality_threshold: float = 1e-3, depth: int = 40) -> dict:
    """Iterate a disk D through the fixed point p and report its C1 distance to W^u(p, delta).

    D is a callable s -> points (s in [0, 1]) or a polyline array; the disk must
    cross W^s(p) transversally.  Iterates are clipped to the adapted box.
    """
    p = np.asarray(p, dtype=float)
    Fp = f(p[None])[0]
    k = np.round(Fp - p)
    if np.max(np.abs(Fp - k - p)) > 1e-9:
        raise PreconditionFailed("p is not a fixed point of f", residual=float(np.max(np.abs(Fp - k - p))))
    chart = chart_at(f, p, depth)
    gx, gy, gs = local_unstable_graph(f, chart, k, delta)
    sx, sy, ss = local_unstable_graph(f, chart, k, delta, inverse=True)
    if callable(D):
        s = np.linspace(0.0, 1.0, n_points)
        P = np.asarray(D(s), dtype=float)
        T = np.gradient(P, s, axis=0)
    elif isinstance(D, tuple):
        P, T = (np.asarray(v, dtype=float) for v in D)
    else:
        P = np.asarray(D, dtype=float)
        T = np.gradient(P, axis=0)
    # crossing with W^s(p): sign change of xi - graph_s(eta)
    C = chart.to_chart(P)
    res = C[:, 0] - np.interp(C[:, 1], sx, sy)
    idx = np.nonzero(np.diff(np.sign(res)) != 0)[0]
    exact = np.nonzero(res == 0)[0]
    if len(idx) == 0 and len(exact) == 0:
        raise LostTransversality("disk does not cross the local stable manifold")
    i0 = int(exact[0]) if len(exact) else int(idx[0])
    Tc = np.linalg.solve(chart.frame, T[i0])
    ws_slope = np.interp(C[i0, 1], sx, ss)  # d xi / d eta along W^s
    tang_ws = _unit(np.array([ws_slope, 1.0]))
    cross_angle = float(line_angle(Tc[None], tang_ws[None])[0])
    if cross_angle < transversality_threshold:
        raise LostTransversality("disk is tangent to the stable manifold at the crossing",
                                 crossing_angle=cross_angle)
    trend = []
    anchor = i0
    for _ in range(n):
        Q, J = f.jacobian(P)
        Q = np.atleast_2d(Q) - k
        T = _unit(np.einsum("nij,nj->ni", J, T))
        Cq = chart.to_chart(Q)
        inside = (np.abs(Cq[:, 0]) <= delta) & (np.abs(Cq[:, 1]) <= delta)
        anchor = int(np.argmin(np.abs(Cq[:, 0] - np.interp(Cq[:, 1], sx, sy))))
        cut = clip_curve(Q, T, inside, anchor)
        if cut is None:
            raise LostTransversality("no crossing with the stable manifold after reclipping")
        P, T = resample_curve(*cut, n_points)
        trend.append(c1_distance_to_graph(chart, P, T, gx, gy, gs, delta))
    return {"c1_distance_trend": trend, "crossing_angle": cross_angle, "delta": delta,
            "metric": "max over matched samples of |eta - eta_u(xi)| + |tangent angle difference|"}


# ---------------------------------------------------------------------------
# Ping-pong
# ---------------------------------------------------------------------------

def reduced_words(L: int, letters=("a", "A", "b", "B"), positive: bool = False) -> list[tuple]:
    """All nontrivial reduced words of length <= L, sorted by length then lexicographically.

    Lowercase is f_i^N, uppercase its inverse; reduction forbids xX and Xx.
    """
    if positive:
        letters = tuple(c for c in letters if c.islower())
    out = []
    for n in range(1, L + 1):
        for w in itertools.product(letters, repeat=n):
            if positive or all(w[i].swapcase() != w[i + 1] for i in range(n - 1)):
                out.append(w)
    return out


@dataclass
class PingPongCertificate:
    N: int
    p1: np.ndarray
    p2: np.ndarray
    delta: float
    word_length_L: int
    min_separation: float
    epsilon: float
    words: list
    cone_evidence: list
    n_tried: list
    semigroup: bool = False
    metric: str = "C1 sum metric over chart graphs; separation = max distance from tracked disk to C"

    def to_json(self) -> dict:
        return {"N": self.N, "p1": self.p1.tolist(), "p2": self.p2.tolist(), "delta": self.delta,
                "word_length_L": self.word_length_L, "n_words": len(self.words),
                "min_separation": self.min_separation, "epsilon": self.epsilon, "semigroup": self.semigroup,
                "N_tried": self.n_tried, "metric": self.metric,
                "words": [dict(e) for e in self.cone_evidence]}


class _Generator:
    """f_i and its inverse as lifts fixing p in the plane (integer shift removed)."""

    def __init__(self, F: TorusLift, p: np.ndarray, depth: int):
        self.F = F
        self.Fi = F.inverse()
        self.p = p
        self.k = np.round(F(p[None])[0] - p)
        if np.max(np.abs(F(p[None])[0] - self.k - p)) > 1e-9:
            raise PreconditionFailed("generator does not fix p")
        self.chart = chart_at(F, p % 1.0, depth)
        self.chart = AdaptedChart(p, self.chart.eu, self.chart.es)

    def step(self, P, T, inverse: bool):
        if inverse:
            Q, J = self.Fi.jacobian(P + self.k)
        else:
            Q, J = self.F.jacobian(P)
            Q = np.atleast_2d(Q) - self.k
        return np.atleast_2d(Q), _unit(np.einsum("nij,nj->ni", J, T))


def _track_word(word, gens, C_disks, N, delta, radius, n_points):
    """Apply the word right to left, one elementary map at a time, clipping to a ball
    around p and finally to the delta-box of the leftmost generator."""
    last = word[-1]
    g = gens[last.lower()]
    start_key = (last.lower(), "u" if last.islower() else "s")
    P, T = C_disks[start_key]
    p = g.p
    for letter in reversed(word):
        g = gens[letter.lower()]
        inv = letter.isupper()
        for _ in range(N):
            P, T = g.step(P, T, inv)
            d = np.linalg.norm(P - p, axis=1)
            anchor = int(np.argmin(d))
            cut = clip_curve(P, T, d <= radius, anchor)
            if cut is None or d[anchor] > 1e-9:
                raise ManifoldTrackingLoss("tracked disk lost the fixed point", word="".join(word))
            P, T = resample_curve(*cut, n_points)
        Cc = g.chart.to_chart(P)
        inside = (np.abs(Cc[:, 0]) <= delta) & (np.abs(Cc[:, 1]) <= delta)
        anchor = int(np.argmin(np.linalg.norm(P - p, axis=1)))
        cut = clip_curve(P, T, inside, anchor)
        if cut is None:
            raise ManifoldTrackingLoss("tracked disk left the adapted box", word="".join(word))
        P, T = resample_curve(*cut, n_points)
    return P, T


def _dist_to_segments(P, segs):
    best = np.full(len(P), np.inf)
    for A, B in segs:
        AB = B - A
        t = np.clip(((P - A) @ AB) / (AB @ AB), 0.0, 1.0)
        best = np.minimum(best, np.linalg.norm(P - (A + t[:, None] * AB), axis=1))
    return best


def _pingpong(f, h, N_search_range, L, epsilon, delta, positive, depth=40, n_points=301,
              workers=None):
    Fh = Compose(h, Compose(f, h.inverse()))
    # p1 = p2 = common fixed point: a fixed point x of f with h(x) = x (after reduction)
    cands = periodic_points(f, 1, verify=False)
    choice = None
    for c in cands:
        x = c["x"]
        hx = h(x[None])[0]
        if np.max(np.abs(((hx - x) + 0.5) % 1.0 - 0.5)) < 1e-12:
            choice = x
            break
    if choice is None:
        raise PreconditionFailed("no fixed point of f is fixed by h; the certifier needs p1 = p2")
    p = choice.copy()
    gens = {"a": _Generator(f, p, depth), "b": _Generator(Fh, p, depth)}
    r = delta / 4.0
    radius = delta * 4.0
    manifold = {}
    C_disks = {}
    for key, g in gens.items():
        for sig, e in (("u", g.chart.eu), ("s", g.chart.es)):
            manifold[(key, sig)] = e
            s = np.linspace(-r, r, n_points)
            C_disks[(key, sig)] = (p + s[:, None] * e, np.tile(e, (n_points, 1)))
    segs = [(p - r * e, p + r * e) for e in manifold.values()]
    # transversality of the four directions at p
    dirs = list(manifold.values())
    pair_angles = [float(line_angle(a[None], b[None])[0]) for a, b in itertools.combinations(dirs, 2)]
    if min(pair_angles) < 1e-3:
        raise PreconditionFailed("local manifolds at p are not pairwise transverse", min_angle=min(pair_angles))
    words = sorted(reduced_words(L, positive=positive), key=lambda w: (len(w), w))
    lo, hi = N_search_range
    N = max(1, lo)
    tried = []
    while N <= hi:
        evidence, ok, min_sep = [], True, math.inf
        for w in words:
            try:
                P, T = _track_word(w, gens, C_disks, N, delta, radius, n_points)
            except ManifoldTrackingLoss:
                ok = False
                break
            first = w[0]
            key = (first.lower(), "u" if first.islower() else "s")
            chart = gens[first.lower()].chart
            e = manifold[key]
            # graph of the predicted local manifold in that generator's chart
            if key[1] == "u":
                gx, gy, gsl = local_unstable_graph(gens[key[0]].F, chart, gens[key[0]].k, delta, steps=12)
                dist = c1_distance_to_graph(chart, P, T, gx, gy, gsl, delta)
            else:
                swapped = AdaptedChart(chart.p, chart.es, chart.eu)
                sx, sy, ssl = local_unstable_graph(gens[key[0]].F, chart, gens[key[0]].k, delta, steps=12,
                                                   inverse=True)
                dist = c1_distance_to_graph(swapped, P, T, sx, sy, ssl, delta)
            sep = float(_dist_to_segments(P, segs).max())
            tang = float(line_angle(T[np.argmin(np.linalg.norm(P - p, axis=1))][None], e[None])[0])
            evidence.append({"word": "".join(w), "expected": f"W{key[1]}_{'f1' if key[0] == 'a' else 'f2'}",
                             "c1_distance": dist, "tangent_angle_at_p": tang, "separation": sep,
                             "extent": float(np.max(np.linalg.norm(P - p, axis=1)))})
            min_sep = min(min_sep, sep)
            if not (dist < epsilon and sep > 0):
                ok = False
                break
        tried.append(N)
        if ok:
            return PingPongCertificate(N, p, p, delta, L, min_sep, epsilon, ["".join(w) for w in words], evidence,
                                       tried, positive)
        N *= 2
    raise NoValidN("no N in the search range certifies all words", tried=tried)


def pingpong_certificate(f: TorusLift, h: TorusLift, N_search_range=(1, 2 ** 10), word_length_L: int = 4,
                         epsilon: float = 1e-2, delta: float = 0.05, n_samples: int = 128,
                         seed: int = 0) -> PingPongCertificate:
    """Bounded-length ping-pong certificate for <f^N, h f^N h^-1>."""
    rep = transversality_report(f, h, n_samples=n_samples, seed=seed)
    if rep.classification != "Branch2":
        raise PreconditionFailed("h preserves a foliation of f (Branch1); ping-pong not applicable",
                                 preserved=rep.preserved)
    return _pingpong(f, h, N_search_range, word_length_L, epsilon, delta, positive=False)


def semigroup_certificate(f: TorusLift, h: TorusLift, N_search_range=(1, 2 ** 10), word_length_L: int = 4,
                          epsilon: float = 1e-2, delta: float = 0.05, n_samples: int = 128,
                          seed: int = 0) -> PingPongCertificate:
    """Positive-word variant needing only Dh E^u transverse to E^u at some sample."""
    rng = np.random.default_rng(seed)
    X = rng.random((n_samples, 2))
    ang = transversality_angles(f, h, X)
    if ang[:, 3].max() <= 1e-3:
        raise PreconditionFailed("Dh E^u is never transverse to E^u on the samples")
    return _pingpong(f, h, N_search_range, word_length_L, epsilon, delta, positive=True)
