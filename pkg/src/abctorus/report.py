"""Markdown report over one run directory or a directory of runs."""
from __future__ import annotations

import json
from pathlib import Path

from .errors import MissingManifest

# headline fields shown per subcommand, in order
HEADLINES = {
    "classify": ("case", "kernel_dim", "kernel_basis", "rho_particular"),
    "faithful": ("faithful", "obstruction", "irrational_rank"),
    "rotset": ("shape", "hull_vertices", "endpoints", "width", "point_tolerance"),
    "jointrot": ("box_sizes", "rotation_law_residual", "difference_hull"),
    "franks": ("resolution", "residual_sup", "iterations", "holder_alpha_estimate", "offgrid_residual"),
    "splitting": ("defect", "min_angle", "expansion_rate", "contraction_rate", "cone_invariant"),
    "periodic": ("period", "count", "expected_count"),
    "transversality": ("classification", "preserved", "witness", "minima", "maxima"),
    "pingpong": ("N", "n_words", "min_separation", "epsilon", "semigroup"),
    "rotnum": ("rho", "error_bound", "oracle", "conjugacy"),
    "flow": ("translation_structure", "embedding", "flow_property_defect", "eigencheck_ratio"),
    "lyapunov": ("estimate", "entropy_inequality"),
    "srb-average": ("N", "tv_deviation", "deviation_by_N"),
    "scans": ("derivative_bound", "distortion"),
}


def _short(value, limit: int = 160) -> str:
    if isinstance(value, dict):
        value = {k: v for k, v in value.items() if not isinstance(v, (list, dict)) or len(str(v)) < 80}
    text = json.dumps(value, sort_keys=True) if not isinstance(value, str) else value
    return text if len(text) <= limit else text[: limit - 3] + "..."


def _load(run_dir: Path) -> tuple[dict, dict | None]:
    mpath = run_dir / "manifest.json"
    if not mpath.is_file():
        raise MissingManifest("no manifest.json in run directory", path=str(run_dir))
    manifest = json.loads(mpath.read_text())
    spath = run_dir / "summary.json"
    summary = json.loads(spath.read_text()) if spath.is_file() else None
    return manifest, summary


def run_section(run_dir: Path) -> list[str]:
    manifest, summary = _load(run_dir)
    cmd = manifest["subcommand"]
    lines = [f"## {cmd} ({run_dir.name})", "",
             f"status: {manifest.get('status')} (exit {manifest.get('exit_code')}), seed {manifest['seed']} "
             f"({manifest['seed_source']})", ""]
    if summary is None:
        return lines + ["summary.json missing", ""]
    if "error" in summary:
        err = summary["error"]
        lines += [f"error: {err.get('error')}: {err.get('message')}", ""]
    fields = [(k, summary[k]) for k in HEADLINES.get(cmd, ()) if k in summary and summary[k] is not None]
    if fields:
        lines += ["| field | value |", "|---|---|"]
        lines += [f"| {k} | `{_short(v)}` |" for k, v in fields]
        lines.append("")
    checks = summary.get("checks", [])
    if checks:
        lines += ["| check | value | tolerance | result |", "|---|---|---|---|"]
        for c in checks:
            mark = "PASS" if c["pass"] else "FAIL"
            lines.append(f"| {c['name']} | `{_short(c['value'], 60)}` | {c['tolerance']} | {mark} |")
        lines.append("")
    lines += ["artifacts: " + ", ".join(o["path"] for o in manifest.get("outputs", [])), ""]
    return lines


def collect_runs(path: Path) -> list[Path]:
    """The directory itself if it is a (non-report) run, else its run subdirectories."""
    m = path / "manifest.json"
    if m.is_file() and json.loads(m.read_text()).get("subcommand") != "report":
        return [path]
    runs = sorted(p for p in path.iterdir() if p.is_dir() and (p / "manifest.json").is_file()) if path.is_dir() else []
    if not runs:
        raise MissingManifest("no run manifests found", path=str(path))
    return runs


def report(path: Path) -> str:
    runs = collect_runs(Path(path))
    lines = ["# abctorus run report", ""]
    n_fail = 0
    for r in runs:
        sec = run_section(r)
        n_fail += sum(1 for line in sec if line.endswith("| FAIL |"))
        lines += sec
    lines.insert(2, f"{len(runs)} run(s), {n_fail} failed check(s)\n")
    return "\n".join(lines)


def write_report(path: Path, out: Path | None = None) -> Path:
    runs = collect_runs(path)
    text = report(path)
    out = out or path / "report.md"
    out.write_text(text)
    if len(runs) == 1 and runs[0] == path:
        mpath = path / "manifest.json"
        manifest = json.loads(mpath.read_text())
        entry = {"path": out.name if out.parent.resolve() == path.resolve() else str(out.resolve()),
                 "kind": "markdown", "description": "collated report"}
        if entry not in manifest["outputs"]:
            manifest["outputs"].append(entry)
        mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    else:
        manifest = {"subcommand": "report", "runs": [r.name for r in runs], "status": "ok", "exit_code": 0,
                    "outputs": [{"path": out.name, "kind": "markdown", "description": "collated report"}]}
        (path / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out
