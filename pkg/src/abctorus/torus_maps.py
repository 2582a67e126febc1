"""Lifts of torus maps, orbits, rotation sets and translation tests.

A ``TorusLift`` is an expression tree over four node types.  Every tree
compiles to a flat list of stages, each either

    forward:  y = M x + t + sum_k c_k trig(2 pi f_k . x)
    inverse:  solve  M y + t + P(y) = x  for y (Newton, seeded by M^-1 (x - t))

which the kernels in ``abctorus.kernels`` evaluate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .errors import (InversionDivergence, LipschitzBoundViolated, NonCommuting, NonConstantDefect,
                     NonIntegerPeriodicity, NotHomotopicToIdentity)
from .exact_linalg import IntMatrix2, as_int_matrix
from .parallel import map_chunks

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# Stages and programs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Stage:
    kind: int  # 0 forward, 1 inverse
    M: np.ndarray  # forward linear part (inverse stages also keep it for Jacobian bookkeeping)
    t: np.ndarray
    coef: np.ndarray  # (K, 2); for inverse stages these are the coefficients of M^-1 P
    freq: np.ndarray  # (K, 2) integer-valued
    phase: np.ndarray  # (K,) 0 sin, 1 cos
    contraction: float = 0.0  # certified Lipschitz bound of M^-1 P for inverse stages

    def inverted(self) -> "Stage":
        Mi = np.linalg.inv(self.M)
        if self.kind == 0:
            q = self.coef @ Mi.T
            lip = lipschitz_bound(q, self.freq)
            if lip >= 1.0 and not is_shear_type(q, self.freq):
                raise LipschitzBoundViolated(
                    "Lip(M^-1 P) >= 1 and the perturbation is not shear-type; inverse not certified",
                    lipschitz=lip)
            return Stage(1, self.M, self.t, q, self.freq, self.phase, lip)
        return Stage(0, self.M, self.t, self.coef @ self.M.T, self.freq, self.phase)


def lipschitz_bound(coef: np.ndarray, freq: np.ndarray) -> float:
    """Upper bound sum_k |c_k| 2 pi |f_k| for the Lipschitz constant of the perturbation."""
    if len(coef) == 0:
        return 0.0
    return float(np.sum(np.linalg.norm(coef, axis=1) * TWO_PI * np.linalg.norm(freq, axis=1)))


def is_shear_type(coef: np.ndarray, freq: np.ndarray) -> bool:
    """True when every coefficient direction is annihilated by every frequency.

    Then DP is nilpotent with DP.P = 0, so y -> y + P(y) is inverted exactly by
    y -> y - P(y) and Newton converges in one step.
    """
    if len(coef) == 0:
        return True
    return bool(np.all(np.abs(coef @ freq.T) < 1e-15))


@dataclass(frozen=True)
class Program:
    kinds: np.ndarray
    mats: np.ndarray
    minv: np.ndarray
    trans: np.ndarray
    tptr: np.ndarray
    coef: np.ndarray
    freq: np.ndarray
    phase: np.ndarray

    def arrays(self):
        return (self.kinds, self.mats, self.minv, self.trans, self.tptr, self.coef, self.freq, self.phase)

    @staticmethod
    def from_stages(stages: Sequence[Stage]) -> "Program":
        tptr = np.zeros(len(stages) + 1, dtype=np.int64)
        for i, s in enumerate(stages):
            tptr[i + 1] = tptr[i] + len(s.coef)
        K = int(tptr[-1])
        cat = (lambda arrs, shape: np.ascontiguousarray(np.concatenate(arrs)) if K else np.zeros(shape))
        return Program(
            kinds=np.array([s.kind for s in stages], dtype=np.int64),
            mats=np.ascontiguousarray(np.array([s.M for s in stages], dtype=np.float64).reshape(-1, 2, 2)),
            minv=np.ascontiguousarray(np.array([np.linalg.inv(s.M) for s in stages], dtype=np.float64).reshape(-1, 2, 2)),
            trans=np.ascontiguousarray(np.array([s.t for s in stages], dtype=np.float64).reshape(-1, 2)),
            tptr=tptr,
            coef=cat([s.coef.reshape(-1, 2) for s in stages], (0, 2)).astype(np.float64),
            freq=cat([s.freq.reshape(-1, 2) for s in stages], (0, 2)).astype(np.float64),
            phase=np.ascontiguousarray(np.concatenate([s.phase for s in stages]).astype(np.int64)) if K
            else np.zeros(0, dtype=np.int64),
        )


def _check_status(status, what="lift evaluation"):
    if np.any(status):
        raise InversionDivergence(f"Newton inversion did not converge during {what}",
                                  n_failed=int(np.count_nonzero(status)))


# ---------------------------------------------------------------------------
# Lift tree
# ---------------------------------------------------------------------------

class TorusLift:
    """Base class; subclasses define ``linear_part``, ``stages`` and ``to_json``."""

    _program: Program | None = None

    @property
    def linear_part(self) -> IntMatrix2:
        raise NotImplementedError

    def stages(self) -> list[Stage]:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @property
    def program(self) -> Program:
        if self.__dict__.get("_program") is None:
            object.__setattr__(self, "_program", Program.from_stages(self.stages()))
        return self._program

    def __call__(self, X, backend=None) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        Y, status = kernels.apply(self.program, X, backend)
        _check_status(status)
        return Y.reshape(X.shape)

    def jacobian(self, X, backend=None):
        """Return (F(X), DF(X)) with DF of shape (N, 2, 2)."""
        X = np.asarray(X, dtype=float)
        Y, J, status = kernels.apply_jac(self.program, X, backend)
        _check_status(status)
        if X.ndim == 1:
            return Y[0], J[0]
        return Y, J

    def __matmul__(self, other: "TorusLift") -> "TorusLift":
        return Compose(self, other)

    def inverse(self) -> "TorusLift":
        return Inverse(self)

    def power(self, n: int) -> "TorusLift":
        if n == 0:
            return Affine(np.eye(2, dtype=int), (0, 0))
        base = self if n > 0 else self.inverse()
        out = base
        for _ in range(abs(n) - 1):
            out = Compose(out, base)
        return out

    @property
    def is_identity_homotopic(self) -> bool:
        return self.linear_part == IntMatrix2.identity()


def _as_vec(t) -> np.ndarray:
    return np.array([float(Fraction(v)) if isinstance(v, str) else float(v) for v in t], dtype=float)


@dataclass(frozen=True, eq=False)
class Affine(TorusLift):
    M: object
    t: object = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "M", as_int_matrix(self.M))
        object.__setattr__(self, "t", _as_vec(self.t))

    @property
    def linear_part(self) -> IntMatrix2:
        return self.M

    def stages(self):
        return [Stage(0, self.M.to_numpy(), self.t, np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0, dtype=np.int64))]

    def to_json(self):
        return {"family": "affine", "M": self.M.tolist(), "t": self.t.tolist()}


@dataclass(frozen=True)
class TrigTerm:
    coef: tuple
    freq: tuple
    phase: str = "sin"

    def __post_init__(self):
        freq = tuple(self.freq)
        for f in freq:
            if float(f) != int(float(f)):
                raise ValueError("trigonometric frequencies must be integers (periodicity)")
        object.__setattr__(self, "freq", tuple(int(float(f)) for f in freq))
        object.__setattr__(self, "coef", tuple(float(_as_vec([c])[0]) for c in self.coef))
        if self.phase not in ("sin", "cos"):
            raise ValueError("phase must be 'sin' or 'cos'")

    def to_json(self):
        return {"coef": list(self.coef), "freq": list(self.freq), "phase": self.phase}


@dataclass(frozen=True, eq=False)
class TrigPerturbed(TorusLift):
    """F(x) = M x + t + sum_k coef_k * phase(2 pi freq_k . x)."""
    M: object
    t: object
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "M", as_int_matrix(self.M))
        object.__setattr__(self, "t", _as_vec(self.t))
        object.__setattr__(self, "terms", tuple(tt if isinstance(tt, TrigTerm) else TrigTerm(**tt) for tt in self.terms))

    @property
    def linear_part(self) -> IntMatrix2:
        return self.M

    def stages(self):
        coef = np.array([tt.coef for tt in self.terms], dtype=float).reshape(-1, 2)
        freq = np.array([tt.freq for tt in self.terms], dtype=float).reshape(-1, 2)
        phase = np.array([0 if tt.phase == "sin" else 1 for tt in self.terms], dtype=np.int64)
        return [Stage(0, self.M.to_numpy(), self.t, coef, freq, phase)]

    def to_json(self):
        return {"family": "trig_perturbed", "M": self.M.tolist(), "t": self.t.tolist(),
                "terms": [tt.to_json() for tt in self.terms]}


@dataclass(frozen=True, eq=False)
class Compose(TorusLift):
    """outer o inner."""
    outer: TorusLift
    inner: TorusLift

    @property
    def linear_part(self) -> IntMatrix2:
        return self.outer.linear_part @ self.inner.linear_part

    def stages(self):
        return self.inner.stages() + self.outer.stages()

    def to_json(self):
        return {"family": "compose", "outer": self.outer.to_json(), "inner": self.inner.to_json()}


@dataclass(frozen=True, eq=False)
class Inverse(TorusLift):
    base: TorusLift

    def __post_init__(self):
        if abs(self.base.linear_part.det) != 1:
            raise NotHomotopicToIdentity("linear part not invertible over Z")
        object.__setattr__(self, "_stages", [s.inverted() for s in reversed(self.base.stages())])

    @property
    def linear_part(self) -> IntMatrix2:
        return self.base.linear_part.inverse()

    @property
    def contraction_bounds(self) -> list[float]:
        return [s.contraction for s in self._stages if s.kind == 1]

    def stages(self):
        return list(self._stages)

    def to_json(self):
        return {"family": "inverse", "map": self.base.to_json()}


def lift_from_json(obj: dict) -> TorusLift:
    fam = obj.get("family")
    if fam in ("affine", "linear", "translation"):
        return Affine(obj.get("M", [[1, 0], [0, 1]]), obj.get("t", [0, 0]))
    if fam == "trig_perturbed":
        return TrigPerturbed(obj["M"], obj.get("t", [0, 0]), tuple(obj.get("terms", ())))
    if fam == "compose":
        if "maps" in obj:  # applied right to left, like function composition
            maps = [lift_from_json(m) for m in obj["maps"]]
            out = maps[-1]
            for m in reversed(maps[:-1]):
                out = Compose(m, out)
            return out
        return Compose(lift_from_json(obj["outer"]), lift_from_json(obj["inner"]))
    if fam == "inverse":
        return Inverse(lift_from_json(obj["map"]))
    raise ValueError(f"unknown map family {fam!r}")


# common constructors

CAT = IntMatrix2([[2, 1], [1, 1]])


def linear(M) -> Affine:
    return Affine(M, (0.0, 0.0))


def cat_map() -> Affine:
    return linear(CAT)


def translation(t) -> Affine:
    return Affine([[1, 0], [0, 1]], t)


def shear(eps: float, k: int = 1) -> TrigPerturbed:
    """(x + eps sin 2 pi k y, y)."""
    return TrigPerturbed([[1, 0], [0, 1]], (0, 0), (TrigTerm((eps, 0.0), (0, k), "sin"),))


def cat_shear(eps: float, A=CAT) -> Compose:
    """A o shear(eps)."""
    return Compose(linear(A), shear(eps))


def fiber_map(a: float, b: float) -> TrigPerturbed:
    """(x + a + b sin 2 pi y, y): each horizontal circle is invariant."""
    return TrigPerturbed([[1, 0], [0, 1]], (a, 0.0), (TrigTerm((b, 0.0), (0, 1), "sin"),))


def lift_from_affine(T) -> Affine:
    """Float lift of an ``AffineTorusMap``."""
    return Affine(T.M, T.translation_float)


# ---------------------------------------------------------------------------
# Orbits and displacements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BigDisplacement:
    """Plane displacement too large for float64: integer part plus float remainder."""
    integer: tuple
    fractional: tuple

    def __array__(self, dtype=None, copy=None):
        return np.array([float(i) + f for i, f in zip(self.integer, self.fractional)], dtype=dtype)


def displacement(F: TorusLift, x, n: int, exact: bool | None = None, backend=None):
    """F^n(x) - x in the plane.

    Identity-homotopic lifts run in the kernels with the orbit kept in [0,1)^2
    and integer shifts accumulated separately.  Other lifts use Python integers
    for the shift (k <- M k + floor), since the plane orbit of an Anosov map
    outgrows float64 after a few hundred steps.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if exact is None:
        exact = not F.is_identity_homotopic
    if not exact:
        if not F.is_identity_homotopic:
            raise NotHomotopicToIdentity("float path needs identity linear part; use exact=True")
        D, status = kernels.orbit_displacements(F.program, X, [n], backend)
        _check_status(status)
        D = D[:, 0, :]
        return D[0] if single else D
    M = F.linear_part
    outs = []
    for x0 in X:
        base = np.floor(x0)
        frac = x0 - base
        k = (0, 0)
        for _ in range(n):
            y, status = kernels.apply(F.program, frac[None, :], backend)
            _check_status(status)
            y = y[0]
            fl = np.floor(y)
            frac = y - fl
            mk = M.apply(k)
            k = (mk[0] + int(fl[0]), mk[1] + int(fl[1]))
        # F^n(x) = F^n(frac0) + M^n base; displacement = F^n(frac0) + (M^n - I) base - frac0
        Mn = M ** n
        mb = Mn.apply((int(base[0]), int(base[1])))
        integer = (k[0] + mb[0] - int(base[0]), k[1] + mb[1] - int(base[1]))
        f = (float(frac[0] - (x0[0] - base[0])), float(frac[1] - (x0[1] - base[1])))
        if max(abs(integer[0]), abs(integer[1])) < 2**52:
            outs.append(np.array([integer[0] + f[0], integer[1] + f[1]]))
        else:
            outs.append(BigDisplacement(integer, f))
    if single:
        return outs[0]
    if all(isinstance(o, np.ndarray) for o in outs):
        return np.array(outs)
    return outs


def homotopy_class(F: TorusLift, n_points: int = 5, seed: int = 0) -> IntMatrix2:
    """Recover M from F(x + e_i) - F(x), requiring integrality to 1e-9."""
    rng = np.random.default_rng(seed)
    X = rng.random((n_points, 2))
    FX = F(X)
    cols = []
    for e in np.eye(2):
        D = F(X + e) - FX
        R = np.round(D)
        if np.max(np.abs(D - R)) > 1e-9 or np.any(R != R[0]):
            raise NonIntegerPeriodicity("F(x + e_i) - F(x) is not a constant integer vector",
                                        max_dev=float(np.max(np.abs(D - R))))
        cols.append(R[0])
    M = np.array(cols).T.astype(int)
    return IntMatrix2(M.tolist())


def periodicity_defect(F: TorusLift, n_points: int = 50, seed: int = 0) -> float:
    """max |F(x + k) - F(x) - M k| over random x and k in {-2..2}^2."""
    rng = np.random.default_rng(seed)
    X = rng.random((n_points, 2)) * 4 - 2
    M = F.linear_part.to_numpy()
    FX = F(X)
    worst = 0.0
    for k0 in range(-2, 3):
        for k1 in range(-2, 3):
            k = np.array([k0, k1], dtype=float)
            worst = max(worst, float(np.max(np.abs(F(X + k) - FX - M @ k))))
    return worst


# ---------------------------------------------------------------------------
# Rotation sets
# ---------------------------------------------------------------------------

def convex_hull_2d(P: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain; returns hull vertices counter-clockwise (collinear points dropped)."""
    pts = sorted(set(map(tuple, np.asarray(P, dtype=float))))
    if len(pts) <= 2:
        return np.array(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def _diameter(P: np.ndarray) -> float:
    H = convex_hull_2d(P) if len(P) > 2 else np.asarray(P)
    if len(H) < 2:
        return 0.0
    diff = H[:, None, :] - H[None, :, :]
    return float(np.sqrt(np.max(np.sum(diff ** 2, axis=-1))))


@dataclass
class RotationSetEstimate:
    hull_vertices: np.ndarray
    shape: str  # "Point" | "Segment" | "Polygon"
    samples: int
    iterate_length: int
    diameter_trend: list
    point_tolerance: float
    center: np.ndarray
    direction: np.ndarray | None = None
    endpoints: np.ndarray | None = None
    width: float = 0.0
    line_check: dict | None = None
    vectors: np.ndarray | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        out = {"shape": self.shape, "samples": self.samples, "iterate_length": self.iterate_length,
               "point_tolerance": self.point_tolerance, "hull_vertices": self.hull_vertices.tolist(),
               "center": self.center.tolist(), "width": self.width,
               "diameter_trend": [[int(n), float(d)] for n, d in self.diameter_trend]}
        if self.direction is not None:
            out["direction"] = self.direction.tolist()
            out["endpoints"] = self.endpoints.tolist()
        if self.line_check is not None:
            out["line_check"] = self.line_check
        return out


def classify_point_cloud(V: np.ndarray, tol: float):
    """Shape of conv(V): Point if diameter < tol, Segment if the hull width < tol, else Polygon."""
    center = V.mean(axis=0)
    diam = _diameter(V)
    if diam < tol:
        return "Point", center, None, None, 0.0
    C = V - center
    _, _, Vt = np.linalg.svd(C, full_matrices=False)
    u = Vt[0] / np.linalg.norm(Vt[0])
    if u[0] < 0 or (u[0] == 0 and u[1] < 0):
        u = -u
    normal = np.array([-u[1], u[0]])
    off = C @ normal
    width = float(off.max() - off.min())
    if width < tol:
        s = C @ u
        ends = np.array([center + s.min() * u, center + s.max() * u])
        return "Segment", center, u, ends, width
    return "Polygon", center, None, None, width


def rotation_set(F: TorusLift, n_iters: int, n_samples: int, seed: int = 0, direction=None,
                 point_tolerance: float | None = None, workers: int | None = None,
                 backend=None) -> RotationSetEstimate:
    """Hull of (F^n(x) - x)/n over uniformly sampled x, with convergence diagnostics."""
    if not F.is_identity_homotopic:
        raise NotHomotopicToIdentity("rotation sets need a lift homotopic to the identity",
                                     linear_part=F.linear_part.tolist())
    rng = np.random.default_rng(seed)
    X = rng.random((n_samples, 2))
    cps = sorted({max(1, n_iters // 8), max(1, n_iters // 4), max(1, n_iters // 2), n_iters})
    prog = F.program

    def run(block):
        return kernels.orbit_displacements(prog, block, cps, backend)

    D, status = map_chunks(run, X, workers)
    _check_status(status, "rotation set sampling")
    tol = point_tolerance if point_tolerance is not None else 10.0 / n_iters
    trend = [(n, _diameter(D[:, i, :] / n)) for i, n in enumerate(cps)]
    V = D[:, -1, :] / n_iters
    shape, center, u, ends, width = classify_point_cloud(V, tol)
    hull = convex_hull_2d(V) if shape == "Polygon" else (ends if shape == "Segment" else center[None, :])
    line_check = None
    if direction is not None:
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        nrm = np.array([-d[1], d[0]])
        off = (V - center) @ nrm
        spread = float(off.max() - off.min())
        line_check = {"direction": d.tolist(), "normal_spread": spread, "on_line": bool(spread < tol)}
    return RotationSetEstimate(hull, shape, n_samples, n_iters, trend, tol, center, u, ends, width,
                               line_check, V)


def average_rotation_vector(F: TorusLift, sample_points, weights=None) -> np.ndarray:
    """sum_i w_i (F(x_i) - x_i), with exactly rounded (fsum) accumulation."""
    X = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if weights is None:
        w = np.full(X.shape[0], 1.0 / X.shape[0])
    else:
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
    D = F(X) - X
    return np.array([math.fsum(w * D[:, j]) for j in range(2)])


# ---------------------------------------------------------------------------
# Joint rotation sets of commuting pairs
# ---------------------------------------------------------------------------

@dataclass
class JointRotationSample:
    """pairs[i, b] is the 2x2 matrix whose columns are the box-averaged rotation
    vectors of the two generators, for initial point i and box size box_sizes[b]."""
    pairs: np.ndarray
    box_sizes: tuple
    initial_points: np.ndarray

    def final(self) -> np.ndarray:
        return self.pairs[:, -1]

    def to_json(self) -> dict:
        return {"box_sizes": list(self.box_sizes), "pairs": self.pairs.tolist()}


def _check_commuting(F1, F2, X, tol=1e-9):
    d = F1(F2(X)) - F2(F1(X))
    worst = float(np.max(np.abs(d)))
    if worst > tol:
        raise NonCommuting("lifts do not commute", max_defect=worst)


def joint_rotation_sample(F1: TorusLift, F2: TorusLift, box_sizes=(8, 16, 32), n_initials: int = 16,
                          seed: int = 0, backend=None) -> JointRotationSample:
    """Box averages of both generators' displacements over {F1^a F2^b x : 0 <= a, b < L}.

    The sum over a of F1(y_ab) - y_ab telescopes to F1^L(F2^b x) - F2^b x, so a
    box costs L orbits of length L per generator.
    """
    for F in (F1, F2):
        if not F.is_identity_homotopic:
            raise NotHomotopicToIdentity("joint rotation sets need identity-homotopic lifts")
    rng = np.random.default_rng(seed)
    X = rng.random((n_initials, 2))
    _check_commuting(F1, F2, rng.random((10, 2)))
    box_sizes = tuple(int(L) for L in box_sizes)
    pairs = np.zeros((n_initials, len(box_sizes), 2, 2))
    for bi, L in enumerate(box_sizes):
        for gi, (G, H) in enumerate(((F1, F2), (F2, F1))):
            # starting points H^b x for b < L
            starts = np.empty((n_initials, L, 2))
            cur = X.copy()
            for b in range(L):
                starts[:, b] = cur
                cur = H(cur)
            D, status = kernels.orbit_displacements(G.program, starts.reshape(-1, 2), [L], backend)
            _check_status(status)
            D = D[:, 0, :].reshape(n_initials, L, 2)
            for i in range(n_initials):
                for j in range(2):
                    pairs[i, bi, j, gi] = math.fsum(D[i, :, j]) / (L * L)
    return JointRotationSample(pairs, box_sizes, X)


def in_convex_hull(points: np.ndarray, q: np.ndarray, tol: float = 1e-9) -> bool:
    """Is q within ``tol`` (per coordinate) of conv(points)?  Any dimension; LP feasibility."""
    P = np.asarray(points, dtype=float).reshape(len(points), -1)
    q = np.asarray(q, dtype=float).ravel()
    m, dim = P.shape
    # variables: lambda (m), slack s (dim) with -s <= P^T lambda - q <= s; minimize sum s
    c = np.concatenate([np.zeros(m), np.ones(dim)])
    A_ub = np.block([[P.T, -np.eye(dim)], [-P.T, -np.eye(dim)]])
    b_ub = np.concatenate([q, -q])
    A_eq = np.concatenate([np.ones(m), np.zeros(dim)])[None, :]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=[(0, None)] * (m + dim),
                  method="highs")
    return bool(res.status == 0 and np.max(res.x[m:]) <= tol)


def rotation_law_residual(A, B, R: np.ndarray) -> float:
    """Distance of A R B^-1 - R to the nearest integer matrix."""
    A, B = as_int_matrix(A).to_numpy(), as_int_matrix(B).to_numpy()
    W = A @ R @ np.linalg.inv(B) - R
    return float(np.max(np.abs(W - np.round(W))))


def difference_hull_check(A, B, sample: JointRotationSample, n_max: int = 5, tol: float = 1e-9) -> list[bool]:
    """For n <= n_max, does A^n (R1 - R2) B^-n stay in conv(S - S) for all sampled R1, R2?"""
    A, B = as_int_matrix(A), as_int_matrix(B)
    R = sample.final().reshape(-1, 2, 2)
    diffs = (R[:, None] - R[None, :]).reshape(-1, 2, 2)
    uniq = np.unique(np.round(diffs.reshape(-1, 4), 12), axis=0)
    out = []
    for n in range(1, n_max + 1):
        An, Bn = (A ** n).to_numpy(), (B ** (-n)).to_numpy()
        ok = all(in_convex_hull(uniq, (An @ d.reshape(2, 2) @ Bn).ravel(), tol) for d in uniq)
        out.append(ok)
    return out


# ---------------------------------------------------------------------------
# Translation tests
# ---------------------------------------------------------------------------

def translation_defect(F: TorusLift, n_samples: int = 4096, tol: float = 1e-9) -> dict:
    """Diameter of the displacement field F(x) - x over a regular grid.

    The grid side is a multiple of 4, so quarter-period extrema of first-order
    trigonometric terms are hit exactly.
    """
    if not F.is_identity_homotopic:
        raise NotHomotopicToIdentity("translation test needs an identity-homotopic lift")
    m = 4 * max(1, math.ceil(math.sqrt(n_samples) / 4))
    g = np.arange(m) / m
    X = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    D = F(X) - X
    defect = _diameter(D)
    return {"max_pair_defect": defect, "is_translation": bool(defect < tol), "grid": m}


def commutator_defect(F1: TorusLift, F2: TorusLift, n_checks: int = 10, seed: int = 0,
                      tol: float = 1e-9) -> tuple[int, int]:
    """Integer k with F1 F2 F1^-1 F2^-1 = translation by k, verified at random points."""
    for F in (F1, F2):
        if not F.is_identity_homotopic:
            raise NotHomotopicToIdentity("commutator defect needs identity-homotopic lifts")
    comm = Compose(F1, Compose(F2, Compose(F1.inverse(), F2.inverse())))
    rng = np.random.default_rng(seed)
    X = np.vstack([[0.5, 0.5], rng.random((n_checks, 2))])
    D = comm(X) - X
    k = np.round(D[0])
    dev = float(np.max(np.abs(D - k)))
    if dev > tol:
        raise NonConstantDefect("commutator is not a constant integer translation", max_deviation=dev,
                                values=D)
    return (int(k[0]), int(k[1]))
