import json
from pathlib import Path

import pytest

from abctorus.affine_actions import eigen_kernel_basis
from abctorus.cli import main

EX = Path(__file__).resolve().parents[1] / "docs" / "examples"


def run(tmp_path, name, *argv):
    d = tmp_path / name
    code = main([*argv, "--run-dir", str(d)])
    return code, d


def read(d, name="summary.json"):
    return json.loads((d / name).read_text())


def test_classify_example(tmp_path):
    code, d = run(tmp_path, "c", "classify", "--A", "[[2,1],[3,2]]", "--B", "[[1,2],[1,3]]", "--C", "0")
    assert code == 0
    s = read(d)
    assert s["kernel_dim"] == 2
    assert s["kernel_basis"] == [K.to_json() for K in eigen_kernel_basis([[2, 1], [3, 2]], [[1, 2], [1, 3]])]


def test_rotset_deterministic(tmp_path):
    args = ["rotset", "--map", str(EX / "seg.json"), "--iters", "2000", "--samples", "500", "--seed", "7"]
    _, d1 = run(tmp_path, "a", *args)
    _, d2 = run(tmp_path, "b", *args, "--workers", "3")
    for name in ("hull.csv", "rotation_vectors.csv", "summary.json"):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()
    s = read(d1)
    assert s["shape"] == "Segment"


def test_seed_env_override(tmp_path, monkeypatch):
    args = ["rotset", "--map", str(EX / "seg.json"), "--iters", "200", "--samples", "50"]
    _, d1 = run(tmp_path, "flag", *args, "--seed", "11")
    monkeypatch.setenv("ABC_SEED", "11")
    _, d2 = run(tmp_path, "env", *args, "--seed", "3")
    m = read(d2, "manifest.json")
    assert m["seed"] == 11 and m["seed_source"] == "env"
    assert (d1 / "rotation_vectors.csv").read_bytes() == (d2 / "rotation_vectors.csv").read_bytes()
    monkeypatch.setenv("ABC_SEED", "not-a-number")
    assert main(["rotset", "--map", str(EX / "seg.json"), "--run-dir", str(tmp_path / "x")]) == 2


def test_pingpong_cli(tmp_path):
    code, d = run(tmp_path, "pp", "pingpong", "--f", str(EX / "cat.json"), "--h", str(EX / "shear.json"), "--L", "3")
    assert code == 0
    cert = read(d, "cert.json")
    assert cert["min_separation"] > 0 and len(cert["words"]) == 52


def test_exit_codes(tmp_path):
    code, d = run(tmp_path, "missing", "franks", "--map", str(tmp_path / "nope.json"))
    assert code == 2 and read(d)["error"]["error"] == "ConfigError"
    code, _ = run(tmp_path, "badmat", "classify", "--A", "[[2,1]]", "--B", "[[1,2],[1,3]]")
    assert code == 2
    assert main(["classify", "--B", "[[1,1],[1,2]]"]) == 2  # usage error
    ident = '{"family":"affine","M":[[1,0],[0,1]],"t":[0.1,0]}'
    code, d = run(tmp_path, "na", "franks", "--map", ident, "--resolution", "8")
    assert code == 3
    s, m = read(d), read(d, "manifest.json")
    assert s["error"]["error"] == "ConeCriterionFailed" and m["status"] == "numerical_failure"
    assert m["exit_code"] == 3


def test_manifest_references_every_output(tmp_path):
    code, d = run(tmp_path, "fr", "franks", "--map", str(EX / "cat_shear.json"), "--resolution", "32")
    assert code == 0
    m = read(d, "manifest.json")
    listed = {o["path"] for o in m["outputs"]}
    on_disk = {p.name for p in d.iterdir()} - {"manifest.json"}
    assert on_disk == listed
    assert m["versions"]["numpy"] and m["config"]["resolution"] == 32
    assert read(d)["checks"][0]["pass"]


def test_srb_and_scans(tmp_path):
    code, d = run(tmp_path, "srb", "srb-average", "--action", str(EX / "action_generic.json"), "--dirac", "0.1,0.2",
                  "--N", "32")
    assert code == 0
    s = read(d)
    devs = [v for _, v in s["deviation_by_N"]]
    assert devs[-1] < devs[3]  # N = 32 against N = 8
    rows = (d / "cloud.csv").read_text().splitlines()
    assert rows[0] == "x,y,weight" and len(rows) == 33
    code, d = run(tmp_path, "sc", "scans", "--action", str(EX / "action_generic.json"), "--n-max", "6")
    assert code == 0 and read(d)["derivative_bound"]["K"] == 1.0


def test_rotnum_flow_lyapunov(tmp_path):
    code, d = run(tmp_path, "rn", "rotnum", "--circle", str(EX / "circle.json"), "--oracle")
    assert code == 0 and all(c["pass"] for c in read(d)["checks"])
    code, d = run(tmp_path, "fl", "flow", "--A", "[[2,1],[1,1]]", "--B", "[[1,1],[1,2]]", "--eta", "0.05")
    assert code == 0 and all(c["pass"] for c in read(d)["checks"])
    assert 3 < read(d)["eigencheck_ratio"] < 5
    code, d = run(tmp_path, "ly", "lyapunov", "--map", str(EX / "cat.json"), "--orbits", "4", "--length", "500")
    assert code == 0 and read(d)["entropy_inequality"]["holds"]


def test_report(tmp_path):
    root = tmp_path / "pipeline"
    main(["classify", "--A", "[[2,1],[3,2]]", "--B", "[[1,2],[1,3]]", "--run-dir", str(root / "classify")])
    main(["rotset", "--map", str(EX / "seg.json"), "--iters", "500", "--samples", "50",
          "--run-dir", str(root / "rotset")])
    main(["periodic", "--map", str(EX / "cat.json"), "--period", "2", "--run-dir", str(root / "periodic")])
    assert main(["report", str(root / "classify")]) == 0
    text = (root / "classify" / "report.md").read_text()
    assert "| case | `TraceEqualGeneric` |" in text and "| kernel_dim | `2` |" in text
    assert "report.md" in {o["path"] for o in read(root / "classify", "manifest.json")["outputs"]}
    assert main(["report", str(root)]) == 0
    text = (root / "report.md").read_text()
    assert text.count("\n## ") == 3
    assert "hull_vertices" in text and "Segment" in text and "PASS" in text
    assert main(["report", str(tmp_path / "empty")]) == 2


@pytest.mark.parametrize("cmd", ["splitting", "transversality", "jointrot", "faithful"])
def test_remaining_subcommands(tmp_path, cmd):
    argv = {"splitting": ["--map", str(EX / "cat_shear.json"), "--resolution", "8"],
            "transversality": ["--f", str(EX / "cat.json"), "--h", str(EX / "shear.json"), "--samples", "32"],
            "jointrot": ["--f1", '{"family":"affine","M":[[1,0],[0,1]],"t":[0.1,0.2]}',
                         "--f2", '{"family":"affine","M":[[1,0],[0,1]],"t":[0.3,0.05]}', "--boxes", "4,8"],
            "faithful": ["--action", str(EX / "action.json")]}[cmd]
    code, d = run(tmp_path, cmd, cmd, *argv)
    assert code == 0
    assert all(c["pass"] for c in read(d)["checks"])
