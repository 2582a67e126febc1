"""Lyapunov exponents, the entropy inequality, Cesàro clouds and derivative scans.

Actions of the ABC group are handled through two models:

* ``AffineModel``: an affine action, optionally conjugated by a smooth torus
  lift h.  Elements of Z^2 act by translations (read through h), so Φ(w) is
  evaluated in closed form with the translation ρw reduced mod 1 exactly.
* ``GeneratorModel``: arbitrary lifts for Φ(e1), Φ(e2); Φ(w) is a word in the
  generators, capped at ``max_compositions`` elementary steps.
"""
from __future__ import annotations

import csv
import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .affine_actions import AbcAffineAction, act
from .errors import DegenerateData, OverflowGuard
from .exact_linalg import IntMatrix2, QuadNum, as_int_matrix
from .hyperbolic import linear_frame, splitting_at
from .parallel import map_chunks
from .torus_maps import Affine, Compose, TorusLift, _check_status, homotopy_class

MAX_COMPOSITIONS = 10 ** 6


# ---------------------------------------------------------------------------
# Lyapunov exponent and the entropy inequality
# ---------------------------------------------------------------------------

@dataclass
class LyapunovEstimate:
    lambda1: float
    n_orbits: int
    orbit_length: int
    spread: float
    per_orbit: np.ndarray = field(repr=False, default=None)

    def to_json(self) -> dict:
        return {"lambda1": self.lambda1, "n_orbits": self.n_orbits, "orbit_length": self.orbit_length,
                "spread": self.spread}


def lyapunov_exponent(f: TorusLift, n_orbits: int = 64, orbit_length: int = 20000, seed: int = 0,
                      burn: int = 50, v0=(1.0, math.sqrt(2) - 1), backend=None) -> LyapunovEstimate:
    """Top exponent from renormalized tangent growth along Lebesgue-uniform initial points.

    The burn-in steps align the tangent vector with the unstable direction and
    bring the orbit onto the forward statistics of f.
    """
    X = np.random.default_rng(seed).random((n_orbits, 2))
    prog = f.program

    def run(block):
        tot, status = kernels.lyapunov(prog, block, v0, burn, orbit_length, backend)
        _check_status(status, "Lyapunov orbit")
        return tot
    per = map_chunks(run, X, min_chunk=8) / orbit_length
    return LyapunovEstimate(math.fsum(per) / n_orbits, n_orbits, orbit_length,
                            float(np.std(per)) if n_orbits > 1 else 0.0, per)


def entropy_inequality_check(f: TorusLift, mu_estimate: LyapunovEstimate, A=None, atol: float = 1e-12) -> dict:
    """log|λ_A| (topological entropy of the linear model) against the measured exponent.

    The exponent stands in for the metric entropy of the forward statistics.
    ``atol`` absorbs rounding when the two sides are equal (linear maps).
    """
    A = as_int_matrix(A) if A is not None else homotopy_class(f)
    _, _, lam = linear_frame(A)
    lhs = math.log(abs(lam))
    rhs = mu_estimate.lambda1
    return {"lhs": lhs, "rhs": rhs, "slack": lhs - rhs, "spread": mu_estimate.spread,
            "holds": bool(lhs >= rhs - 3 * mu_estimate.spread - atol)}


# ---------------------------------------------------------------------------
# Action models
# ---------------------------------------------------------------------------

def frac_exact(q) -> float:
    """Fractional part of an exact number, rounded to float only at the end."""
    return float(q - math.floor(q))


def b_orbit(B: IntMatrix2, v, n: int) -> tuple[int, int]:
    return tuple((B ** n).apply(v))


class AffineModel:
    """Affine action x ↦ Aⁿx + ρw, optionally read through a smooth lift h (Φ_h = h⁻¹ Φ h)."""

    def __init__(self, action: AbcAffineAction, h: TorusLift | None = None):
        self.action = action
        self.B = action.B
        self.h = h
        self.h_inv = h.inverse() if h is not None else None
        lin = Affine(action.A, (0.0, 0.0))
        self.f = lin if h is None else Compose(self.h_inv, Compose(lin, h))
        self.compositions_used = 0

    def translation(self, w) -> np.ndarray:
        t = act(self.action, (0, tuple(int(x) for x in w))).t
        if self.action.exact:
            return np.array([frac_exact(QuadNum.coerce(x)) for x in t])
        # float mode: ρ is read as its binary value and ρw is formed exactly
        R = self.action.rho_float
        return np.array([frac_exact(Fraction(float(R[i, 0])) * int(w[0]) + Fraction(float(R[i, 1])) * int(w[1]))
                         for i in range(2)])

    def element(self, w, X):
        """(Φ(w)(X), DΦ(w)(X))."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        t = self.translation(w)
        if self.h is None:
            return X + t, np.broadcast_to(np.eye(2), (len(X), 2, 2)).copy()
        Y, J1 = self.h.jacobian(X)
        Z, J2 = self.h_inv.jacobian(Y + t)
        return Z, J2 @ J1

    def cost(self, w) -> int:
        return 0


class GeneratorModel:
    """Φ(e1), Φ(e2) as lifts; Φ(w) = Φ(e1)^{w0} Φ(e2)^{w1} by repeated composition."""

    def __init__(self, f: TorusLift, g1: TorusLift, g2: TorusLift, B, max_compositions: int = MAX_COMPOSITIONS):
        self.f, self.B = f, as_int_matrix(B)
        self.gens = (g1, g2)
        self.invs = (g1.inverse(), g2.inverse())
        self.max_compositions = max_compositions
        self.compositions_used = 0

    def cost(self, w) -> int:
        return abs(int(w[0])) + abs(int(w[1]))

    def element(self, w, X):
        c = self.cost(w)
        if self.compositions_used + c > self.max_compositions:
            raise OverflowGuard("composition budget exceeded", needed=c, used=self.compositions_used,
                                cap=self.max_compositions)
        self.compositions_used += c
        Y = np.atleast_2d(np.asarray(X, dtype=float)).copy()
        J = np.broadcast_to(np.eye(2), (len(Y), 2, 2)).copy()
        for i in (1, 0):  # rightmost factor first
            g = self.gens[i] if w[i] >= 0 else self.invs[i]
            for _ in range(abs(int(w[i]))):
                Y, Js = g.jacobian(Y)
                J = Js @ J
        return Y, J


def _check_budget(model, v, N) -> None:
    cap = getattr(model, "max_compositions", None)
    if cap is None:
        return
    total = 0
    for n in range(1, N + 1):
        total += model.cost(b_orbit(model.B, v, n))
        if total > cap:
            raise OverflowGuard("composition count exceeds the cap", N_cap=n - 1, cap=cap)


# ---------------------------------------------------------------------------
# Cesàro clouds
# ---------------------------------------------------------------------------

@dataclass
class MeasureCloud:
    points: np.ndarray
    weights: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.mod(np.asarray(self.points, dtype=float), 1.0)
        self.weights = np.asarray(self.weights, dtype=float)
        s = math.fsum(self.weights)
        if s <= 0:
            raise DegenerateData("weights must have positive total")
        self.weights = self.weights / s

    def histogram(self, bins: int) -> np.ndarray:
        H, _, _ = np.histogram2d(self.points[:, 0], self.points[:, 1], bins=bins, range=[[0, 1], [0, 1]],
                                 weights=self.weights)
        return H

    def uniform_deviation(self, bins: int, metric: str = "tv") -> float:
        """Total variation (default) or max relative bin deviation from the uniform histogram."""
        H = self.histogram(bins)
        if metric == "tv":
            return 0.5 * float(np.abs(H - 1.0 / bins ** 2).sum())
        if metric == "max":
            return float(np.abs(H * bins ** 2 - 1.0).max())
        raise ValueError(metric)

    def histogram_json(self, bins: int) -> dict:
        return {"bins": bins, "density": self.histogram(bins).tolist(),
                "tv_deviation": self.uniform_deviation(bins), "provenance": self.provenance}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "weight"])
            for (x, y), wt in zip(self.points, self.weights):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(wt))])

    @classmethod
    def from_csv(cls, path) -> "MeasureCloud":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, :2], data[:, 2], {"source": str(path)})


def srb_proxy(f: TorusLift, n_samples: int, seed: int = 0, burn: int = 100, backend=None) -> np.ndarray:
    """Forward-Birkhoff sample: Lebesgue-uniform points pushed ``burn`` steps by f."""
    X = np.random.default_rng(seed).random((n_samples, 2))
    Y, status = kernels.torus_orbit(f.program, X, burn, backend)
    _check_status(status, "SRB proxy orbit")
    return Y


def srb_average(model, N: int, n_samples: int = 1000, seed: int = 0, v=(1, 0), mu=None,
                burn: int = 100) -> MeasureCloud:
    """(1/N) Σ_{n=1}^{N} Φ(Bⁿv)_* μ as a weighted cloud.

    ``mu`` may be an (M, 2) array of points (equal weights); by default it is
    the forward-Birkhoff proxy of the SRB measure of Φ(B).
    """
    _check_budget(model, v, N)
    P = srb_proxy(model.f, n_samples, seed, burn) if mu is None else np.atleast_2d(np.asarray(mu, dtype=float))
    clouds = [np.mod(model.element(b_orbit(model.B, v, n), P)[0], 1.0) for n in range(1, N + 1)]
    pts = np.concatenate(clouds)
    return MeasureCloud(pts, np.full(len(pts), 1.0 / len(pts)),
                        {"kind": "cesaro", "N": N, "v": list(v), "n_initial": len(P), "seed": seed,
                         "initial": "srb_proxy" if mu is None else "given"})


# ---------------------------------------------------------------------------
# Derivative and distortion scans
# ---------------------------------------------------------------------------

def _grid(n: int) -> np.ndarray:
    g = (np.arange(n) + 0.5) / n
    return np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)


def unstable_derivative(model, w, X, Eu) -> np.ndarray:
    """‖DΦ(w)(x) e_u(x)‖ for unit unstable vectors Eu at X."""
    _, J = model.element(w, X)
    return np.linalg.norm(np.einsum("nij,nj->ni", J, Eu), axis=1)


def derivative_bound_scan(model, v=(1, 0), n_max: int = 20, grid: int = 16,
                          depth: int = 40, flat_tol: float = 0.1) -> dict:
    """K = max(max D^u, 1/min D^u) over grid points and 1 ≤ n ≤ n_max.

    ``K_by_n`` holds the per-n values and ``K_running`` the bound over all
    n' ≤ n.  ``flagged`` marks growth of the running bound from n_max/2 to
    n_max beyond ``flat_tol`` (relative), the signature of a pair that does
    not come from an action.
    """
    X = _grid(grid)
    Eu, _, _, _ = splitting_at(model.f, X, depth)
    per_n, running, K = {}, {}, 1.0
    for n in range(1, n_max + 1):
        d = unstable_derivative(model, b_orbit(model.B, v, n), X, Eu)
        per_n[n] = float(max(d.max(), 1.0 / d.min()))
        K = max(K, per_n[n])
        running[n] = K
    growth = running[n_max] / running[max(1, n_max // 2)]
    return {"K": K, "K_by_n": per_n, "K_running": running, "growth": growth,
            "flagged": bool(growth > 1 + flat_tol), "grid": grid, "v": list(v), "n_max": n_max}


def unstable_pairs(f: TorusLift, n_pairs: int, seed: int = 0, max_len: float = 0.05, steps: int = 8,
                   depth: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Pairs (x, y) with y on the local unstable leaf of x (midpoint integration of E_u)."""
    rng = np.random.default_rng(seed)
    X = rng.random((n_pairs, 2))
    ell = max_len * rng.random(n_pairs)
    Y = X.copy()
    Eu0, _, _, _ = splitting_at(f, X, depth)
    h = (ell / steps)[:, None]
    prev = Eu0
    for _ in range(steps):
        E1, _, _, _ = splitting_at(f, Y, depth)
        E1 = np.where((np.sum(E1 * prev, axis=1) < 0)[:, None], -E1, E1)
        M = Y + 0.5 * h * E1
        E2, _, _, _ = splitting_at(f, M, depth)
        E2 = np.where((np.sum(E2 * E1, axis=1) < 0)[:, None], -E2, E2)
        Y = Y + h * E2
        prev = E2
    return X, Y


def distortion_scan(model, alpha: float = 1.0, n_pairs: int = 64, ns=(5, 10, 20), v=(1, 0), seed: int = 0,
                    max_len: float = 0.05, depth: int = 40) -> dict:
    """Least C with |log(D^u_x Φ(Bⁿv) / D^u_y Φ(Bⁿv))| ≤ C |x − y|^{α²} over the sampled pairs."""
    X, Y = unstable_pairs(model.f, n_pairs, seed, max_len, depth=depth)
    Eux, _, _, _ = splitting_at(model.f, X, depth)
    Euy, _, _, _ = splitting_at(model.f, Y, depth)
    dist = np.linalg.norm(Y - X, axis=1)
    keep = dist > 0
    C_by_n, running, worst = {}, {}, None
    best = 0.0
    for n in ns:
        w = b_orbit(model.B, v, n)
        r = np.abs(np.log(unstable_derivative(model, w, X, Eux) / unstable_derivative(model, w, Y, Euy)))
        ratio = np.where(keep, r / np.where(keep, dist, 1.0) ** (alpha ** 2), 0.0)
        i = int(np.argmax(ratio))
        C_by_n[n] = float(ratio[i])
        if worst is None or ratio[i] > best:
            best, worst = float(ratio[i]), {"x": X[i].tolist(), "y": Y[i].tolist(), "n": n}
        running[n] = best
    return {"C": best, "C_by_n": C_by_n, "C_running": running, "alpha": alpha, "worst_pair": worst,
            "n_pairs": n_pairs}
