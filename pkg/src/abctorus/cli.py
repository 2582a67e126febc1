"""Command-line front end: ``abc <subcommand> [options]``.

Every run owns a run directory.  ``manifest.json`` is written there before any
computation (config, seed, versions) and rewritten at the end with the list of
artifacts and the exit status.  Exit status: 0 success, 2 configuration
error, 3 numerical failure (the error payload goes to summary.json).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import AbcError, ConfigError, MissingManifest, _jsonable

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# Input parsing
# ---------------------------------------------------------------------------

def load_json_arg(value: str, what: str = "input"):
    """Inline JSON (starting with '{' or '[') or a path to a JSON file."""
    text = value.strip()
    if not text.startswith(("{", "[")):
        path = Path(value)
        if not path.is_file():
            raise ConfigError(f"{what}: file not found", path=value)
        text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what}: invalid JSON ({exc.msg})", source=value) from None


def parse_matrix(value: str, what: str):
    """2x2 matrix from JSON; entries may be ints or "p/q" strings.  A bare integer c means c*id."""
    obj = load_json_arg(value, what) if value.strip().startswith("[") else value.strip()
    if isinstance(obj, str):
        try:
            c = int(obj)
        except ValueError:
            raise ConfigError(f"{what}: expected a 2x2 JSON matrix or an integer", value=value) from None
        return c
    try:
        rows = [[Fraction(str(x)) for x in row] for row in obj]
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: bad matrix entries", value=value) from None
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ConfigError(f"{what}: matrix must be 2x2", value=value)
    if any(x.denominator != 1 for r in rows for x in r):
        raise ConfigError(f"{what}: matrix entries must be integers", value=value)
    return [[int(x) for x in r] for r in rows]


def parse_floats(value: str, n: int | None = None, what: str = "vector") -> list[float]:
    try:
        out = [float(x) for x in value.split(",")]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers", value=value) from None
    if n is not None and len(out) != n:
        raise ConfigError(f"{what}: expected {n} numbers", value=value)
    return out


def parse_ints(value: str, what: str = "list") -> list[int]:
    try:
        return [int(x) for x in value.split(",")]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated integers", value=value) from None


def load_map(value: str, what: str = "map"):
    from .torus_maps import lift_from_json
    obj = load_json_arg(value, what)
    try:
        return lift_from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: not a valid map definition ({exc})", source=value) from None


def load_action(value: str):
    from .affine_actions import AbcAffineAction
    obj = load_json_arg(value, "action")
    try:
        return AbcAffineAction.from_json(obj)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"action: missing or malformed field ({exc})", source=value) from None


def resolve_seed(flag_seed: int | None) -> tuple[int, str]:
    env = os.environ.get("ABC_SEED")
    if env is not None:
        try:
            seed = int(env, 0)
        except ValueError:
            raise ConfigError("ABC_SEED must be an integer", value=env) from None
        source = "env"
    elif flag_seed is not None:
        seed, source = flag_seed, "flag"
    else:
        seed, source = 0, "default"
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer", seed=seed)
    return seed, source


# ---------------------------------------------------------------------------
# Run directory
# ---------------------------------------------------------------------------

def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def versions() -> dict:
    from importlib import metadata

    import numba
    import scipy

    from . import kernels
    try:
        own = metadata.version("abctorus")
    except metadata.PackageNotFoundError:  # pragma: no cover - source checkout
        own = "unknown"
    return {"abctorus": own, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__, "kernel_backend": kernels.BACKEND}


class Run:
    """Artifact bookkeeping for one invocation."""

    def __init__(self, run_dir: Path, subcommand: str, config: dict, seed: int, seed_source: str):
        self.dir = run_dir
        self.dir.mkdir(parents=True, exist_ok=True)
        self.manifest = {"format_version": FORMAT_VERSION, "subcommand": subcommand, "config": config,
                         "seed": seed, "seed_source": seed_source, "versions": versions(),
                         "status": "running", "outputs": []}
        self.seed = seed
        self._write_manifest()

    def _write_manifest(self):
        (self.dir / "manifest.json").write_text(dumps(self.manifest))

    def _register(self, path: Path, kind: str, description: str):
        try:
            name = str(path.resolve().relative_to(self.dir.resolve()))
        except ValueError:
            name = str(path.resolve())
        self.manifest["outputs"].append({"path": name, "kind": kind, "description": description})

    def path(self, name: str | None, default: str) -> Path:
        return Path(name) if name else self.dir / default

    def json(self, name: str, obj, description: str = "", path: Path | None = None) -> Path:
        p = path or self.dir / name
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(dumps(obj))
        self._register(p, "json", description)
        return p

    def csv(self, name: str, header: list[str], rows, description: str = "", path: Path | None = None) -> Path:
        p = path or self.dir / name
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])
        p.write_text(buf.getvalue())
        self._register(p, "csv", description)
        return p

    def plot(self, name: str, header: list[str], blocks, description: str = "") -> Path:
        """gnuplot data: '#' header, whitespace columns, blank line between blocks."""
        p = self.dir / name
        lines = ["# " + " ".join(header)]
        for bi, block in enumerate(blocks):
            if bi:
                lines.append("")
            lines.extend(" ".join(_fmt(x) for x in row) for row in block)
        p.write_text("\n".join(lines) + "\n")
        self._register(p, "plot", description)
        return p

    def external(self, path: Path, kind: str, description: str):
        self._register(path, kind, description)

    def finish(self, status: str, exit_code: int):
        self.manifest["status"] = status
        self.manifest["exit_code"] = exit_code
        self._write_manifest()


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return str(x)


def check(name: str, value, tolerance, passed: bool) -> dict:
    return {"name": name, "value": value, "tolerance": tolerance, "pass": bool(passed)}


# ---------------------------------------------------------------------------
# Subcommands.  Each returns the summary dict (with a "checks" list).
# ---------------------------------------------------------------------------

def cmd_classify(args, run: Run) -> dict:
    from .affine_actions import classify
    A, B = parse_matrix(args.A, "--A"), parse_matrix(args.B, "--B")
    C = parse_matrix(args.C, "--C")
    res = classify(A, B, C, basis=args.basis)
    out = res.to_json()
    out["A"], out["B"] = A, B
    out["C"] = C if not isinstance(C, int) else [[C, 0], [0, C]]
    out["checks"] = [check("kernel_dim", res.kernel_dim, "exact", True)]
    return out


def cmd_faithful(args, run: Run) -> dict:
    from .affine_actions import faithfulness_test
    action = load_action(args.action)
    rep = faithfulness_test(action)
    out = {"action": action.to_json(), **rep.to_json()}
    out["checks"] = [check("faithful", rep.faithful, "exact", True)]
    return out


def cmd_rotset(args, run: Run) -> dict:
    from .torus_maps import rotation_set
    F = load_map(args.map)
    direction = parse_floats(args.direction, 2, "--direction") if args.direction else None
    est = rotation_set(F, args.iters, args.samples, seed=run.seed, direction=direction,
                       point_tolerance=args.point_tol)
    H = est.hull_vertices
    run.csv("hull.csv", ["x", "y"], H.tolist(), "rotation-set hull vertices")
    closed = np.vstack([H, H[:1]])
    run.plot("hull.dat", ["x", "y"], [closed.tolist()], "closed hull polygon")
    run.csv("rotation_vectors.csv", ["x", "y"], est.vectors.tolist(), "sampled average displacements")
    run.plot("diameter_trend.dat", ["n", "diameter"], [est.diameter_trend], "hull diameter against iterate length")
    out = est.to_json()
    out["checks"] = [check("shape", est.shape, est.point_tolerance, True)]
    if est.line_check is not None:
        out["checks"].append(check("on_line", est.line_check["normal_spread"], est.point_tolerance,
                                   est.line_check["on_line"]))
    return out


def cmd_jointrot(args, run: Run) -> dict:
    from .torus_maps import difference_hull_check, joint_rotation_sample, rotation_law_residual
    F1, F2 = load_map(args.f1, "--f1"), load_map(args.f2, "--f2")
    boxes = parse_ints(args.boxes, "--boxes")
    s = joint_rotation_sample(F1, F2, boxes, args.initials, seed=run.seed)
    rows = []
    for i in range(s.pairs.shape[0]):
        for b, L in enumerate(s.box_sizes):
            R = s.pairs[i, b]
            rows.append([i, L, R[0, 0], R[1, 0], R[0, 1], R[1, 1]])
    run.csv("joint_rotation.csv", ["initial", "box", "r1x", "r1y", "r2x", "r2y"], rows,
            "box averages per initial point")
    out = s.to_json()
    out["checks"] = []
    if args.A and args.B:
        A, B = parse_matrix(args.A, "--A"), parse_matrix(args.B, "--B")
        hull = difference_hull_check(A, B, s, args.n_max)
        law = max(rotation_law_residual(A, B, R) for R in s.final())
        out["difference_hull"] = hull
        out["rotation_law_residual"] = law
        out["checks"].append(check("difference_hull", all(hull), "all n <= n_max", all(hull)))
    return out


def cmd_franks(args, run: Run) -> dict:
    from .conjugacy import conjugacy_residual, franks_conjugacy
    F = load_map(args.map)
    res = franks_conjugacy(F, args.resolution, args.tol, args.max_sweeps)
    grid_path = run.path(args.out, "h.grid")
    res.h.save(grid_path)
    run.external(grid_path, "grid", "conjugacy node values w = h - id")
    run.plot("residuals.dat", ["sweep", "residual"], [list(enumerate(res.residual_history, 1))],
             "residual per sweep")
    out = res.to_json()
    out["grid_file"] = str(grid_path)
    out["checks"] = [check("residual_sup", res.residual_sup, args.tol, res.residual_sup < args.tol)]
    if args.offgrid_samples:
        out["offgrid_residual"] = conjugacy_residual(res.h, F, n_offgrid_samples=args.offgrid_samples,
                                                     seed=run.seed)
    return out


def cmd_splitting(args, run: Run) -> dict:
    from .hyperbolic import compute_splitting, grid_points
    F = load_map(args.map)
    S = compute_splitting(F, args.resolution, args.depth)
    X = grid_points(args.resolution)
    Eu, Es = S.Eu.reshape(-1, 2), S.Es.reshape(-1, 2)
    run.csv("splitting.csv", ["x", "y", "eu_x", "eu_y", "es_x", "es_y"],
            np.hstack([X, Eu, Es]).tolist(), "unit splitting vectors at grid nodes")
    ang = np.arctan2(Eu[:, 1], Eu[:, 0])
    run.plot("eu_angle.dat", ["x", "y", "angle_eu"], [np.column_stack([X, ang]).tolist()], "E_u direction field")
    out = S.to_json()
    out["checks"] = [check("defect", S.defect, args.defect_tol, S.defect < args.defect_tol),
                     check("cone_invariant", S.cone_invariant, None, S.cone_invariant)]
    return out


def cmd_periodic(args, run: Run) -> dict:
    from .hyperbolic import periodic_points
    F = load_map(args.map)
    pts = periodic_points(F, args.period, args.tol)
    Aq = F.linear_part ** args.period
    expected = abs((Aq.rows[0][0] - 1) * (Aq.rows[1][1] - 1) - Aq.rows[0][1] * Aq.rows[1][0])
    rows = [[p["x"][0], p["x"][1], p["k"][0], p["k"][1], float(np.real(p["eigenvalues"][0])),
             float(np.real(p["eigenvalues"][1]))] for p in pts]
    run.csv("periodic.csv", ["x", "y", "k1", "k2", "eig_u", "eig_s"], rows, "periodic points of the period")
    out = {"period": args.period, "count": len(pts), "expected_count": expected,
           "points": [{"x": p["x"], "k": list(p["k"]), "eigenvalues": np.real(p["eigenvalues"])} for p in pts]}
    out["checks"] = [check("count", len(pts), expected, len(pts) == expected)]
    return out


def cmd_transversality(args, run: Run) -> dict:
    from .hyperbolic import ANGLE_NAMES, transversality_report
    f, h = load_map(args.f, "--f"), load_map(args.h, "--h")
    rep = transversality_report(f, h, args.samples, seed=run.seed, depth=args.depth)
    run.csv("angles.csv", ["x", "y", *ANGLE_NAMES], np.hstack([rep.samples, rep.angles]).tolist(),
            "line angles per sample")
    edges = np.linspace(0, np.pi / 2, args.bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    counts = [np.histogram(np.clip(rep.angles[:, i], 0, np.pi / 2), edges)[0] for i in range(4)]
    run.plot("angle_hist.dat", ["center", *ANGLE_NAMES], [np.column_stack([centers, *counts]).tolist()],
             "angle histograms")
    out = rep.to_json()
    out["checks"] = [check("classification", rep.classification, None, True)]
    return out


def cmd_pingpong(args, run: Run) -> dict:
    from .hyperbolic import pingpong_certificate, semigroup_certificate
    f, h = load_map(args.f, "--f"), load_map(args.h, "--h")
    fn = semigroup_certificate if args.semigroup else pingpong_certificate
    cert = fn(f, h, (args.N_min, args.N_max), args.L, args.epsilon, args.delta, args.samples, run.seed)
    cert_path = run.path(args.out, "cert.json")
    run.json("cert.json", cert.to_json(), "ping-pong certificate with per-word evidence", path=cert_path)
    run.plot("separation.dat", ["word_index", "separation", "c1_distance"],
             [[(i, e["separation"], e["c1_distance"]) for i, e in enumerate(cert.cone_evidence)]],
             "per-word separation and C1 distance")
    out = {"N": cert.N, "n_words": len(cert.words), "min_separation": cert.min_separation,
           "epsilon": cert.epsilon, "delta": cert.delta, "semigroup": cert.semigroup,
           "certificate_file": str(cert_path)}
    out["checks"] = [check("min_separation", cert.min_separation, 0, cert.min_separation > 0)]
    return out


def _circle_from_args(args):
    from .leaf_flow import CircleLift
    if args.circle:
        try:
            return CircleLift.from_json(load_json_arg(args.circle, "--circle"))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"--circle: malformed lift ({exc})") from None
    terms = [tuple(parse_floats(t, 3, "--term")) for t in (args.term or [])]
    return CircleLift.trig(args.a, [(int(k), c, d) for k, c, d in terms])


def _parse_rho(value: str):
    from .exact_linalg import QuadNum
    if value.startswith("quad:"):
        a, b, d = value[5:].split(",")
        return QuadNum(Fraction(a), Fraction(b), int(d))
    return float(value)


def cmd_rotnum(args, run: Run) -> dict:
    from .leaf_flow import circle_conjugacy, rotation_number, rotation_number_farey
    g = _circle_from_args(args)
    r = rotation_number(g, args.n)
    out = {"lift": g.to_json(), **r, "checks": []}
    if args.oracle:
        o = rotation_number_farey(g)
        out["oracle"] = o
        agree = abs(o["rho"] - r["rho"]) <= max(r["error_bound"], o["width"])
        out["checks"].append(check("oracle_agreement", abs(o["rho"] - r["rho"]), r["error_bound"], agree))
    if args.rho:
        conj = circle_conjugacy(g, _parse_rho(args.rho), args.modes, adjust_parameter=args.adjust)
        run.json("circle_conjugacy.json", conj.to_json(), "Fourier coefficients of the circle conjugacy")
        out["conjugacy"] = {"defect": conj.defect, "sigma": conj.sigma, "iterations": conj.iterations}
        out["checks"].append(check("conjugacy_defect", conj.defect, 1e-6, conj.defect < 1e-6))
    return out


def cmd_flow(args, run: Run) -> dict:
    from .leaf_flow import (affine_leaf_action, conjugated_leaf_action, flow_embedding, flow_property_defect,
                            leaf_translation_structure, vector_field_eigencheck)
    A, B = parse_matrix(args.A, "--A"), parse_matrix(args.B, "--B")
    action, info = affine_leaf_action(A, B, args.c1)
    if args.eta:
        action, _ = conjugated_leaf_action(action, args.eta)
    struct = leaf_translation_structure(action)
    flow = flow_embedding(action, n_samples=args.samples, seed=run.seed, n_modes=args.modes)
    fp = flow_property_defect(flow, seed=run.seed)
    eig = [vector_field_eigencheck(flow, dt=dt, seed=run.seed) for dt in (2 * args.dt, args.dt)]
    meta = {"A": A, "B": B, "c1": args.c1, "eta": args.eta, "leaf_model": info}
    run.json("flow.json", {**flow.to_json(), "metadata": meta}, "circle conjugacy data and flow metadata")
    span = abs(flow.chart.p1 - flow.chart.p0)
    S = flow.chart.p0 + np.linspace(-2, 2, 201) * span
    run.plot("vector_field.dat", ["s", "X"], [np.column_stack([S, flow.vector_field(S, args.dt)]).tolist()],
             "generating vector field on the leaf")
    out = {"translation_structure": {k: v for k, v in struct.items() if k != "powers_norms"},
           "embedding": flow.report, "flow_property_defect": fp, "eigencheck": eig,
           "eigencheck_ratio": eig[0]["max_residual"] / max(eig[1]["max_residual"], 1e-300)}
    out["checks"] = [check("translation_structure", struct["distance"], 1e-6, struct["check"]),
                     check("flow_property", fp, 1e-7, fp < 1e-7),
                     check("renormalization", flow.report.get("renormalization"), 1e-5,
                           flow.report.get("renormalization", 0.0) < 1e-5)]
    return out


def cmd_lyapunov(args, run: Run) -> dict:
    from .ergodic import entropy_inequality_check, lyapunov_exponent
    F = load_map(args.map)
    est = lyapunov_exponent(F, args.orbits, args.length, seed=run.seed, burn=args.burn)
    ent = entropy_inequality_check(F, est)
    run.csv("lyapunov_orbits.csv", ["orbit", "lambda"], list(enumerate(est.per_orbit)), "per-orbit exponents")
    out = {"estimate": est.to_json(), "entropy_inequality": ent}
    out["checks"] = [check("entropy_inequality", ent["slack"], -3 * est.spread, ent["holds"])]
    return out


def _model_from_args(args):
    from .ergodic import AffineModel, GeneratorModel
    if args.action:
        h = load_map(args.h, "--h") if args.h else None
        return AffineModel(load_action(args.action), h)
    if not (args.f and args.g1 and args.g2 and args.B):
        raise ConfigError("give --action, or all of --f --g1 --g2 --B")
    return GeneratorModel(load_map(args.f, "--f"), load_map(args.g1, "--g1"), load_map(args.g2, "--g2"),
                          parse_matrix(args.B, "--B"), args.max_compositions)


def cmd_srb_average(args, run: Run) -> dict:
    from .ergodic import srb_average
    model = _model_from_args(args)
    v = parse_ints(args.v, "--v")
    mu = np.array([parse_floats(args.dirac, 2, "--dirac")]) if args.dirac else None
    cloud = srb_average(model, args.N, args.samples, seed=run.seed, v=v, mu=mu)
    cloud_path = run.path(args.out, "cloud.csv")
    cloud.to_csv(cloud_path)
    run.external(cloud_path, "csv", "weighted Cesàro cloud")
    run.json("histogram.json", cloud.histogram_json(args.bins), "binned cloud density")
    Ns = sorted({n for n in (1, 2, 4, 8, 16, 32, 64, 128, 256) if n <= args.N} | {args.N})
    devs = [(n, srb_average(model, n, args.samples, seed=run.seed, v=v, mu=mu).uniform_deviation(args.bins))
            for n in Ns]
    run.plot("deviation.dat", ["N", "tv_deviation"], [devs], "deviation from uniform against N")
    out = {"N": args.N, "bins": args.bins, "tv_deviation": cloud.uniform_deviation(args.bins),
           "max_deviation": cloud.uniform_deviation(args.bins, "max"), "provenance": cloud.provenance,
           "deviation_by_N": devs, "cloud_file": str(cloud_path)}
    out["checks"] = [check("deviation_decreasing", [d for _, d in devs], None, devs[-1][1] <= devs[0][1])]
    return out


def cmd_scans(args, run: Run) -> dict:
    from .ergodic import derivative_bound_scan, distortion_scan
    model = _model_from_args(args)
    v = parse_ints(args.v, "--v")
    der = derivative_bound_scan(model, v, args.n_max, args.grid)
    run.plot("K_by_n.dat", ["n", "K_n", "K_running"],
             [[(n, der["K_by_n"][n], der["K_running"][n]) for n in der["K_by_n"]]], "derivative bound per n")
    ns = [n for n in (5, 10, 20) if n <= args.n_max] or [args.n_max]
    dist = {a: distortion_scan(model, a, args.pairs, ns, v, seed=run.seed)
            for a in parse_floats(args.alpha, None, "--alpha")}
    out = {"derivative_bound": der, "distortion": {str(a): r for a, r in dist.items()}}
    out["checks"] = [check("derivative_bound_flat", der["growth"], 1.1, not der["flagged"])]
    return out


COMMANDS = {
    "classify": cmd_classify, "faithful": cmd_faithful, "rotset": cmd_rotset, "jointrot": cmd_jointrot,
    "franks": cmd_franks, "splitting": cmd_splitting, "periodic": cmd_periodic,
    "transversality": cmd_transversality, "pingpong": cmd_pingpong, "rotnum": cmd_rotnum, "flow": cmd_flow,
    "lyapunov": cmd_lyapunov, "srb-average": cmd_srb_average, "scans": cmd_scans,
}


# ---------------------------------------------------------------------------
# Argument parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="abc", description="Numerics for abelian-by-cyclic actions on the torus.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--run-dir", default=None, help="output directory (default abc-runs/<subcommand>)")
        sp.add_argument("--seed", type=int, default=None, help="64-bit seed; ABC_SEED overrides")
        sp.add_argument("--workers", type=int, default=None, help="worker threads (default: logical cores)")
        return sp

    sp = add("classify", "solve A rho - rho B = C and describe the kernel")
    sp.add_argument("--A", required=True, help="2x2 integer matrix as JSON")
    sp.add_argument("--B", required=True, help="2x2 integer matrix as JSON")
    sp.add_argument("--C", default="0", help="2x2 integer matrix as JSON, or c for c*id")
    sp.add_argument("--basis", choices=("auto", "eigen"), default="auto", help="kernel basis when A = B")

    sp = add("faithful", "decide faithfulness of an affine action")
    sp.add_argument("--action", required=True, help="action JSON file or inline JSON")

    sp = add("rotset", "rotation set of an identity-homotopic lift")
    sp.add_argument("--map", required=True, help="map JSON file or inline JSON")
    sp.add_argument("--iters", type=int, default=2000, help="orbit length per sample")
    sp.add_argument("--samples", type=int, default=500, help="number of initial points")
    sp.add_argument("--direction", default=None, help="dx,dy line to test")
    sp.add_argument("--point-tol", type=float, default=None, help="diameter below which the set is a Point")

    sp = add("jointrot", "joint rotation sample of a commuting pair")
    sp.add_argument("--f1", required=True, help="first commuting map")
    sp.add_argument("--f2", required=True, help="second commuting map")
    sp.add_argument("--boxes", default="8,16,32", help="Folner box sizes")
    sp.add_argument("--initials", type=int, default=16, help="number of initial points")
    sp.add_argument("--A", default=None, help="A for the transformation-law check")
    sp.add_argument("--B", default=None, help="B for the transformation-law check")
    sp.add_argument("--n-max", type=int, default=5, help="largest power in the difference-hull check")

    sp = add("franks", "Franks conjugacy to the linear model")
    sp.add_argument("--map", required=True, help="map JSON file or inline JSON")
    sp.add_argument("--resolution", type=int, default=256, help="grid side N")
    sp.add_argument("--tol", type=float, default=1e-8, help="target node residual")
    sp.add_argument("--max-sweeps", type=int, default=500, help="sweep budget")
    sp.add_argument("--offgrid-samples", type=int, default=0, help="random points for the off-grid residual (0 skips)")
    sp.add_argument("--out", default=None, help="grid file (default <run-dir>/h.grid)")

    sp = add("splitting", "hyperbolic splitting field")
    sp.add_argument("--map", required=True, help="map JSON file or inline JSON")
    sp.add_argument("--resolution", type=int, default=64, help="grid side N")
    sp.add_argument("--depth", type=int, default=40, help="pushing depth for the invariant directions")
    sp.add_argument("--defect-tol", type=float, default=1e-8, help="required splitting defect")

    sp = add("periodic", "periodic points by Newton continuation")
    sp.add_argument("--map", required=True, help="map JSON file or inline JSON")
    sp.add_argument("--period", type=int, default=1, help="period q")
    sp.add_argument("--tol", type=float, default=1e-12, help="Newton tolerance")

    sp = add("transversality", "foliation-preservation dichotomy")
    sp.add_argument("--f", required=True, help="Anosov map")
    sp.add_argument("--h", required=True, help="second generator")
    sp.add_argument("--samples", type=int, default=256, help="sample points")
    sp.add_argument("--depth", type=int, default=40, help="pushing depth for the invariant directions")
    sp.add_argument("--bins", type=int, default=30, help="angle histogram bins")

    sp = add("pingpong", "bounded-length ping-pong certificate")
    sp.add_argument("--f", required=True, help="Anosov map")
    sp.add_argument("--h", required=True, help="second generator")
    sp.add_argument("--L", type=int, default=3, help="maximal reduced word length")
    sp.add_argument("--N-min", type=int, default=1, help="smallest power tried")
    sp.add_argument("--N-max", type=int, default=1024, help="largest power tried")
    sp.add_argument("--epsilon", type=float, default=1e-2, help="C1 closeness required of tracked disks")
    sp.add_argument("--delta", type=float, default=0.05, help="chart size around the fixed point")
    sp.add_argument("--samples", type=int, default=128, help="points per tracked disk")
    sp.add_argument("--semigroup", action="store_true", help="positive words only")
    sp.add_argument("--out", default=None, help="certificate file (default <run-dir>/cert.json)")

    sp = add("rotnum", "rotation number and circle conjugacy")
    sp.add_argument("--circle", default=None, help="circle lift JSON")
    sp.add_argument("--a", type=float, default=0.0, help="translation part when --circle is absent")
    sp.add_argument("--term", action="append", help="k,c_sin,d_cos (repeatable)")
    sp.add_argument("--n", type=int, default=100000, help="iterates (error bound 1/n)")
    sp.add_argument("--oracle", action="store_true", help="also run the Farey bracket oracle")
    sp.add_argument("--rho", default=None, help="target rotation number: float or quad:a,b,d")
    sp.add_argument("--modes", type=int, default=256, help="Fourier modes")
    sp.add_argument("--adjust", action="store_true", help="solve for the modifying parameter")

    sp = add("flow", "flow embedding of an affine leaf model")
    sp.add_argument("--A", required=True, help="2x2 integer matrix as JSON")
    sp.add_argument("--B", required=True, help="2x2 integer matrix as JSON")
    sp.add_argument("--c1", type=float, default=1.0, help="kernel coefficient of the model")
    sp.add_argument("--eta", type=float, default=0.0, help="smooth leaf conjugation amplitude")
    sp.add_argument("--samples", type=int, default=64, help="sample points on the leaf")
    sp.add_argument("--modes", type=int, default=64, help="Fourier modes of the circle conjugacy")
    sp.add_argument("--dt", type=float, default=1e-4, help="step for the vector field")

    sp = add("lyapunov", "Lyapunov exponent and entropy inequality")
    sp.add_argument("--map", required=True, help="map JSON file or inline JSON")
    sp.add_argument("--orbits", type=int, default=64, help="number of orbits")
    sp.add_argument("--length", type=int, default=20000, help="orbit length after burn-in")
    sp.add_argument("--burn", type=int, default=50, help="burn-in steps")

    for name, help_ in (("srb-average", "Cesàro cloud of generator pushforwards"),
                        ("scans", "derivative and distortion scans")):
        sp = add(name, help_)
        sp.add_argument("--action", default=None, help="affine action JSON")
        sp.add_argument("--h", default=None, help="smooth conjugating map for --action")
        sp.add_argument("--f", default=None, help="map for the B generator (with --g1 --g2 --B)")
        sp.add_argument("--g1", default=None, help="map for the first Z^2 generator")
        sp.add_argument("--g2", default=None, help="map for the second Z^2 generator")
        sp.add_argument("--B", default=None, help="2x2 integer matrix of the cyclic part")
        sp.add_argument("--max-compositions", type=int, default=10 ** 6, help="composition budget for generator models")
        sp.add_argument("--v", default="1,0", help="Z^2 vector pushed by B")
        if name == "srb-average":
            sp.add_argument("--N", type=int, default=32, help="number of averaged powers")
            sp.add_argument("--samples", type=int, default=1000, help="points in the initial cloud")
            sp.add_argument("--bins", type=int, default=4, help="histogram bins per side")
            sp.add_argument("--dirac", default=None, help="x,y initial point instead of the SRB proxy")
            sp.add_argument("--out", default=None, help="cloud CSV (default <run-dir>/cloud.csv)")
        else:
            sp.add_argument("--n-max", type=int, default=20, help="largest power scanned")
            sp.add_argument("--grid", type=int, default=16, help="grid side for the derivative scan")
            sp.add_argument("--alpha", default="0.5,1.0", help="Holder exponents for the distortion scan")
            sp.add_argument("--pairs", type=int, default=64, help="unstable point pairs")

    sp = sub.add_parser("report", help="collate run directories into report.md")
    sp.add_argument("run_dir", help="a run directory or a directory of runs")
    sp.add_argument("--out", default=None, help="report file (default <run_dir>/report.md)")
    return p


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("command",)}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help exits 0, usage errors exit 2
        return EXIT_OK if not exc.code else EXIT_CONFIG
    if args.command == "report":
        from .report import write_report
        try:
            path = write_report(Path(args.run_dir), Path(args.out) if args.out else None)
        except MissingManifest as exc:
            print(json.dumps(exc.to_dict()), file=sys.stderr)
            return EXIT_CONFIG
        print(path)
        return EXIT_OK

    from .parallel import default_workers, set_default_workers
    try:
        seed, source = resolve_seed(args.seed)
    except ConfigError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return EXIT_CONFIG
    set_default_workers(args.workers)
    args.workers = default_workers()
    run_dir = Path(args.run_dir) if args.run_dir else Path("abc-runs") / args.command
    run = Run(run_dir, args.command, _config(args), seed, source)
    try:
        summary = COMMANDS[args.command](args, run)
        code, status = EXIT_OK, "ok"
    except ConfigError as exc:
        summary, code, status = {"error": exc.to_dict()}, EXIT_CONFIG, "config_error"
    except ValueError as exc:  # malformed input rejected by a constructor
        summary, code, status = {"error": {"error": "ConfigError", "message": str(exc)}}, EXIT_CONFIG, "config_error"
    except AbcError as exc:
        summary, code, status = {"error": exc.to_dict()}, EXIT_NUMERIC, "numerical_failure"
    summary = {"subcommand": args.command, "status": status, **summary}
    run.json("summary.json", summary, "run summary")
    run.finish(status, code)
    if code:
        print(json.dumps(summary["error"]), file=sys.stderr)
    else:
        print(run_dir / "summary.json")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
