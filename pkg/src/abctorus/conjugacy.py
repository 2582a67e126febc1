"""Franks conjugacy h = id + w with h o f = A o h, and regularity diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import chi2

from . import kernels
from .errors import (DegenerateData, NonInjectiveSample, NotContracting, PreconditionFailed)
from .hyperbolic import grid_points, linear_frame, verify_anosov
from .torus_maps import TorusLift

GRID_MAGIC = "# abc-grid 1"


@dataclass
class GridFunction:
    """Node values of a periodic 2-vector field on the N x N grid {(i/N, j/N)}.

    With ``add_identity`` the represented map is x + w(x).
    """
    values: np.ndarray  # (N, N, 2), values[i, j] at (i/N, j/N)
    add_identity: bool = True

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    @classmethod
    def zeros(cls, N: int, add_identity: bool = True) -> "GridFunction":
        return cls(np.zeros((N, N, 2)), add_identity)

    @classmethod
    def from_function(cls, fn, N: int, add_identity: bool = True) -> "GridFunction":
        """Sample a periodic field fn(points) -> (M, 2) on the nodes."""
        return cls(np.asarray(fn(grid_points(N)), dtype=float).reshape(N, N, 2), add_identity)

    def field(self, P, backend=None) -> np.ndarray:
        """Interpolated w at P (arguments reduced mod 1)."""
        return kernels.bilinear(self.values, np.atleast_2d(P), backend)

    def __call__(self, P, backend=None) -> np.ndarray:
        P = np.atleast_2d(np.asarray(P, dtype=float))
        w = self.field(P, backend)
        return P + w if self.add_identity else w

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=-1)))

    def oscillation(self, k: int) -> float:
        """max |v(x + k e) - v(x)| over nodes x and e in {(1,0), (0,1), (1,1)} / N."""
        N = self.resolution
        V = self.values
        out = 0.0
        for di, dj in ((k, 0), (0, k), (k, k)):
            D = np.roll(V, (-di, -dj), axis=(0, 1)) - V
            if self.add_identity:
                D = D + np.array([di, dj]) / N
            out = max(out, float(np.max(np.linalg.norm(D, axis=-1))))
        return out

    def restrict(self, factor: int = 2) -> "GridFunction":
        return GridFunction(self.values[::factor, ::factor].copy(), self.add_identity)

    def orientation_consistent(self) -> bool:
        """Sign of the finite-difference Jacobian determinant of the map is positive on all cells."""
        if not self.add_identity:
            return False
        N = self.resolution
        V = self.values
        dx = np.roll(V, -1, axis=0) - V + np.array([1.0 / N, 0.0])
        dy = np.roll(V, -1, axis=1) - V + np.array([0.0, 1.0 / N])
        det = dx[..., 0] * dy[..., 1] - dx[..., 1] * dy[..., 0]
        return bool(np.all(det > 0))

    def save(self, path) -> None:
        """Write the documented .grid text format (header + CSV rows i,j,w0,w1)."""
        N = self.resolution
        ii, jj = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
        rows = np.column_stack([ii.ravel(), jj.ravel(), self.values.reshape(-1, 2)])
        with open(path, "w") as fh:
            fh.write(f"{GRID_MAGIC}\n# resolution {N}\n# add_identity {int(self.add_identity)}\n")
            fh.write("# columns i,j,w0,w1\n")
            np.savetxt(fh, rows, fmt=["%d", "%d", "%.17g", "%.17g"], delimiter=",")

    @classmethod
    def load(cls, path) -> "GridFunction":
        meta = {}
        with open(path) as fh:
            first = fh.readline().strip()
            if first != GRID_MAGIC:
                raise ValueError(f"not an abc grid file: {path}")
            for line in fh:
                if not line.startswith("#"):
                    break
                key, _, val = line[1:].strip().partition(" ")
                meta[key] = val
        N = int(meta["resolution"])
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        vals = np.zeros((N, N, 2))
        vals[data[:, 0].astype(int), data[:, 1].astype(int)] = data[:, 2:4]
        return cls(vals, bool(int(meta.get("add_identity", 1))))


@dataclass
class ConjugacyResult:
    h: GridFunction
    residual_sup: float
    iterations: int
    holder_alpha_estimate: float
    residual_history: list = field(default_factory=list)
    contraction_ratios: list = field(default_factory=list)
    lam: float = 0.0

    def to_json(self) -> dict:
        return {"resolution": self.h.resolution, "residual_sup": self.residual_sup, "iterations": self.iterations,
                "holder_alpha_estimate": self.holder_alpha_estimate, "lambda": self.lam,
                "residual_history": self.residual_history, "contraction_ratios": self.contraction_ratios,
                "sup_w": self.h.sup_norm()}


def franks_conjugacy(f: TorusLift, resolution: int = 256, tol: float = 1e-8, max_sweeps: int = 500,
                     stall_sweeps: int = 50, verify: bool = True, backend=None) -> ConjugacyResult:
    """Solve A w - w o f = p (p = f - A) in A-eigencoordinates on the grid.

    residual_sup is the node-anchored residual of the discrete equations: the
    unstable part at the nodes x, the stable part at the preimages f^-1(x).
    """
    A = f.linear_part
    if verify:
        verify_anosov(f)
    u, s, lam = linear_frame(A)
    Pm = np.stack([u, s], axis=1)
    N = resolution
    X = grid_points(N)
    Am = A.to_numpy()
    FX = f(X)
    FiX = f.inverse()(X)
    pX = np.linalg.solve(Pm, (FX - X @ Am.T).T).T  # eigencoordinates of p at nodes
    pFi = np.linalg.solve(Pm, (X - FiX @ Am.T).T).T  # ... at f^-1(nodes)
    FXr, FiXr = FX % 1.0, FiX % 1.0
    wu = np.zeros(N * N)
    ws = np.zeros(N * N)
    history, ratios = [], []
    best, since_best, prev_step = math.inf, 0, None
    it = 0
    for it in range(1, max_sweeps + 1):
        wu_new = (kernels.bilinear(wu.reshape(N, N), FXr, backend) + pX[:, 0]) / lam
        ws_new = kernels.bilinear(ws.reshape(N, N), FiXr, backend) / lam - pFi[:, 1]
        step = max(float(np.max(np.abs(wu_new - wu))), float(np.max(np.abs(ws_new - ws))))
        wu, ws = wu_new, ws_new
        if prev_step is not None and prev_step > 0:
            ratios.append(step / prev_step)
        prev_step = step
        res = _node_residual(wu, ws, N, FXr, FiXr, pX, pFi, lam, backend)
        history.append(res)
        if res < best * (1 - 1e-12):
            best, since_best = res, 0
        else:
            since_best += 1
        if res <= tol / 10:
            break
        if since_best >= stall_sweeps:
            raise NotContracting("residual stalled", residual=res, tol=tol, sweeps=it)
    else:
        if history[-1] > tol:
            raise NotContracting("sweep budget exhausted", residual=history[-1], tol=tol, sweeps=it)
    W = (np.outer(wu, u) + np.outer(ws, s)).reshape(N, N, 2)
    h = GridFunction(W, True)
    try:
        alpha = holder_exponent_estimate(h)
    except DegenerateData:
        alpha = 1.0
    return ConjugacyResult(h, history[-1], it, alpha, history, ratios, lam)


def _node_residual(wu, ws, N, FXr, FiXr, pX, pFi, lam, backend=None) -> float:
    ru = lam * wu - kernels.bilinear(wu.reshape(N, N), FXr, backend) - pX[:, 0]
    rs = kernels.bilinear(ws.reshape(N, N), FiXr, backend) / lam - pFi[:, 1] - ws
    return max(float(np.max(np.abs(ru))), float(np.max(np.abs(rs))))


def conjugacy_residual(h, f: TorusLift, A=None, n_offgrid_samples: int = 10000, seed: int = 0,
                       include_grid: bool = True) -> float:
    """sup |h(f(x)) - A h(x)| over grid nodes and random off-grid points, compared mod Z^2."""
    A = f.linear_part if A is None else A
    Am = A.to_numpy() if hasattr(A, "to_numpy") else np.asarray(A, dtype=float)
    pts = [np.random.default_rng(seed).random((n_offgrid_samples, 2))]
    if include_grid and isinstance(h, GridFunction):
        pts.append(grid_points(h.resolution))
    P = np.concatenate(pts)
    D = h(f(P)) - h(P) @ Am.T
    D = D - np.round(D)
    return float(np.max(np.linalg.norm(D, axis=1)))


def holder_exponent_estimate(h: GridFunction, scales=None) -> float:
    """Least-squares slope of log oscillation against log scale over node offsets, clamped to (0, 1]."""
    N = h.resolution
    if scales is None:
        # fine scales only: bounded fields saturate once the offset is a sizable fraction of the period
        scales = [2 ** k for k in range(int(math.log2(N)) + 1) if 2 ** k <= max(4, N // 64)]
    scales = sorted(int(k) for k in scales)
    if len(scales) < 3:
        raise DegenerateData("need at least 3 scales", scales=scales)
    osc = np.array([h.oscillation(k) for k in scales])
    if np.any(osc <= 1e-300) or not np.all(np.isfinite(osc)):
        raise DegenerateData("oscillation underflow", oscillations=osc.tolist())
    slope = np.polyfit(np.log(np.asarray(scales, dtype=float) / N), np.log(osc), 1)[0]
    return float(min(max(slope, 1e-12), 1.0))


def pushforward_volume_check(h, bins: int = 20, n_samples: int = 200000, seed: int = 0) -> dict:
    """Histogram h(x) mod 1 for uniform x and compare with the uniform bin mass."""
    if isinstance(h, GridFunction) and not h.orientation_consistent():
        raise PreconditionFailed("h fails the local degree (orientation) check")
    X = np.random.default_rng(seed).random((n_samples, 2))
    Y = np.asarray(h(X)) % 1.0
    Y = np.where(Y >= 1.0, 0.0, Y)
    pairs = cKDTree(Y, boxsize=1.0).query_pairs(1e-12, output_type="ndarray")
    if len(pairs):
        raise NonInjectiveSample("samples collapse under h", n_pairs=int(len(pairs)),
                                 example=X[pairs[0]].tolist())
    H, _, _ = np.histogram2d(Y[:, 0], Y[:, 1], bins=bins, range=[[0, 1], [0, 1]])
    expected = n_samples / bins ** 2
    stat = float(np.sum((H - expected) ** 2) / expected)
    dof = bins ** 2 - 1
    pval = float(chi2.sf(stat, dof))
    return {"max_bin_deviation": float(np.max(np.abs(H / expected - 1.0))),
            "noise_scale": 1.0 / math.sqrt(expected), "chi2": stat, "dof": dof, "p_value": pval,
            "consistent_3sigma": pval > 0.0027, "bins": bins, "n_samples": n_samples}
