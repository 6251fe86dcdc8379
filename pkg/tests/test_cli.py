import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from tvsc.cli import main
from tvsc.io import read_datum


def run(*argv):
    return main([str(a) for a in argv])


def shell(cmd, cwd):
    return subprocess.run(cmd, shell=True, cwd=cwd, capture_output=True, text=True, timeout=600)


def test_gen_writes_datum_and_manifest(tmp_path, capsys):
    assert run("--outdir", tmp_path, "gen", "disc", "--n", 32) == 0
    out = Path(capsys.readouterr().out.strip())
    assert out == tmp_path / "disc.csv"
    g = read_datum(out)
    assert g.shape == (32, 32)
    man = json.loads(out.with_suffix(".manifest.json").read_text())
    assert man["command"] == "gen" and man["exit_code"] == 0
    assert man["config"]["spec"]["kind"] == "disc"
    assert str(out) in man["outputs"] and man["wall_time"] >= 0


def test_gen_from_spec_file(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"kind": "ramp", "n": 20, "radial": True, "extent": 3.0}))
    assert run("gen", "--spec", spec, "--outdir", tmp_path) == 0
    prof = read_datum(capsys.readouterr().out.strip())
    assert prof.n == 20 and prof.R == 3.0
    man = json.loads((tmp_path / "ramp_radial.manifest.json").read_text())
    assert str(spec) in man["inputs"]


@pytest.mark.parametrize(
    "argv, needle",
    [
        (["denoise", "x.csv", "--lambda", "-1"], "--lambda"),
        (["denoise", "x.csv", "--lambda", "abc"], "--lambda"),
        (["gen", "disc", "--n", "0"], "--n"),
        (["gen", "hexagon"], "invalid choice"),
        (["levelset", "x.csv", "--lambda", "0.1"], "--t"),
    ],
)
def test_bad_arguments_exit_2(argv, needle, capsys):
    assert run(*argv) == 2
    assert needle in capsys.readouterr().err


def test_missing_input_file(tmp_path, capsys):
    assert run("--outdir", tmp_path, "denoise", tmp_path / "nope.csv", "--lambda", "0.1") == 2
    assert "not found" in capsys.readouterr().err


def test_geometry_out_of_domain(tmp_path, capsys):
    assert run("--outdir", tmp_path, "gen", "disc", "--extent", "0.5") == 2
    assert "out of domain" in capsys.readouterr().err


def test_denoise_and_analyze_grid(tmp_path, capsys):
    run("--outdir", tmp_path, "gen", "disc", "--n", 48, "--extent", 4)
    datum = capsys.readouterr().out.strip()
    assert run("--outdir", tmp_path, "denoise", datum, "--lambda", "0.1,0.2", "--tol", "1e-6", "--max-iters", 50000) == 0
    results = capsys.readouterr().out.split()
    assert [Path(r).name for r in results] == ["disc_lam0.1.json", "disc_lam0.2.json"]
    meta = json.loads(Path(results[0]).read_text())
    assert meta["kind"] == "solve_result" and meta["converged"] and meta["lambda"] == 0.1
    u = read_datum(meta["u"])
    assert u.values.max() == pytest.approx(0.8, abs=0.03)
    assert run("--outdir", tmp_path, "analyze", results[0]) == 0
    rep = json.loads(Path(capsys.readouterr().out.strip()).read_text())
    assert rep["kind"] == "staircase_report" and all(rep["checks"].values())
    assert len(rep["flat_zones"]) >= 2 and rep["flat_zones"][0]["rle"]


def test_radial_pipeline(tmp_path, capsys):
    run("--outdir", tmp_path, "gen", "disc", "--radial", "--n", 400, "--extent", 4)
    datum = capsys.readouterr().out.strip()
    assert run("--outdir", tmp_path, "analyze", datum, "--lambda", "0.15") == 0
    rep = json.loads(Path(capsys.readouterr().out.strip()).read_text())
    assert rep["m_u"] == pytest.approx(0.7, abs=1e-9)
    assert rep["min_u"] == pytest.approx(0.02, abs=1e-9)
    assert rep["jumps"]["radii"] == [pytest.approx(1.0)]


def test_analyze_needs_lambda_for_datum(tmp_path, capsys):
    run("--outdir", tmp_path, "gen", "disc", "--n", 16)
    datum = capsys.readouterr().out.strip()
    assert run("--outdir", tmp_path, "analyze", datum) == 2


def test_levelset_outputs(tmp_path, capsys):
    run("--outdir", tmp_path, "gen", "two_squares", "--n", 24)
    datum = capsys.readouterr().out.strip()
    assert run("--outdir", tmp_path, "levelset", datum, "--lambda", "0.1", "--t", "0.3,0.6") == 0
    out = json.loads(Path(capsys.readouterr().out.strip()).read_text())
    assert [c["level"] for c in out["cuts"]] == [0.3, 0.6]
    for c in out["cuts"]:
        assert Path(c["minimal"]).exists() and Path(c["maximal"]).exists()
        lo = read_datum(c["minimal"]).values > 0.5
        hi = read_datum(c["maximal"]).values > 0.5
        assert not np.any(lo & ~hi)


def test_levelset_rejects_radial(tmp_path, capsys):
    run("--outdir", tmp_path, "gen", "ramp", "--radial", "--n", 16)
    datum = capsys.readouterr().out.strip()
    assert run("--outdir", tmp_path, "levelset", datum, "--lambda", "0.1", "--t", "0.5") == 2


def test_flow_outputs(tmp_path, capsys):
    run("--outdir", tmp_path, "gen", "disc", "--radial", "--n", 256, "--extent", 4)
    datum = capsys.readouterr().out.strip()
    assert run("--outdir", tmp_path, "flow", datum, "--t", "0.1,0.2", "--substeps", 2) == 0
    man = json.loads(Path(capsys.readouterr().out.strip()).read_text())
    assert man["times"] == [0.0, 0.1, 0.2]
    np.testing.assert_allclose(man["origin_trace"], [1.0, 0.8, 0.6], atol=1e-9)
    assert len(man["states"]) == 3 and max(man["defects"]) <= 1e-8


def test_nonconvergence_exit_3(tmp_path, capsys):
    run("--outdir", tmp_path, "gen", "disc", "--n", 64)
    datum = capsys.readouterr().out.strip()
    code = run("--outdir", tmp_path, "denoise", datum, "--lambda", "0.1", "--tol", "1e-12", "--max-iters", 5)
    assert code == 3
    captured = capsys.readouterr()
    assert "did not converge" in captured.err
    meta = json.loads(Path(captured.out.strip()).read_text())
    assert meta["converged"] is False and Path(meta["u"]).exists()


def test_jobs_gives_same_results(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("TVSC_THREADS", "2")
    run("--outdir", tmp_path, "gen", "bumps", "--n", 24)
    datum = capsys.readouterr().out.strip()
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("--outdir", a, "--jobs", 1, "denoise", datum, "--lambda", "0.05,0.1") == 0
    assert run("--outdir", b, "--jobs", 4, "denoise", datum, "--lambda", "0.05,0.1") == 0
    for name in ("bumps_lam0.05_u.csv", "bumps_lam0.1_u.csv"):
        assert (a / name).read_text() == (b / name).read_text()


def test_verify_suite(tmp_path, capsys):
    assert run("--outdir", tmp_path, "verify", "radial-semigroup") == 0
    out = json.loads(Path(capsys.readouterr().out.strip()).read_text())
    assert out["passed"] and out["checks"]


def test_verify_unknown_suite(tmp_path):
    assert run("--outdir", tmp_path, "verify", "nonsense") == 2


def test_shell_pipeline(tmp_path):
    exe = f"{sys.executable} -m tvsc.cli"
    r = shell(f"{exe} gen disc --n 32 --extent 4 | {exe} denoise --lambda 0.1 | {exe} analyze", tmp_path)
    assert r.returncode == 0, r.stderr
    rep = json.loads(Path(tmp_path, r.stdout.strip()).read_text())
    assert rep["kind"] == "staircase_report"
    assert len(list(tmp_path.glob("*.manifest.json"))) == 3
