import json
import math
import subprocess
import sys

import numpy as np
import pytest

import oracles as O

from latbp.cli import run


@pytest.fixture
def mfile(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"n": 3, "rows": [[1.0, 0.2, 0.0], [0.1, 2.0, 0.3], [0.0, 0.05, 1.5]]}))
    return p


def _run(args, tmp_path):
    out = tmp_path / "out.json"
    code = run(args + ["--out", str(out), "--no-timestamp"])
    return code, (json.loads(out.read_text()) if out.exists() else None), out


@pytest.mark.parametrize("norm", ["l1", "l2", "linf", "lp:3"])
def test_analyze(mfile, tmp_path, norm):
    code, rep, _ = _run(["analyze", "--matrix", str(mfile), "--norm", norm], tmp_path)
    assert code == 0 and rep["ok"]
    assert rep["schema"] == "latbp-report-v1"
    p = {"l1": 1, "l2": 2, "linf": math.inf}.get(norm)
    if p is not None:
        M = np.array(json.loads(mfile.read_text())["rows"])
        assert rep["report"]["bp"]["value"] == pytest.approx(O.bp_brute(M, p), abs=1e-12)
    assert all(c["ok"] for c in rep["checks"])


def test_analyze_known_bp(tmp_path):
    p = tmp_path / "a.json"
    p.write_text(json.dumps({"n": 2, "rows": [[0.0, 0.25], [0.25, 0.0]]}))
    code, rep, _ = _run(["analyze", "--matrix", str(p), "--norm", "linf"], tmp_path)
    assert code == 0
    assert rep["report"]["bp"]["value"] == 0.25
    assert rep["inverse"]["ratio"] == pytest.approx(0.5)


def test_analyze_weighted(mfile, tmp_path):
    w = tmp_path / "w.json"
    w.write_text("[1.0, 2.0, 0.5]")
    code, rep, _ = _run(["analyze", "--matrix", str(mfile), "--norm", f"wsup:{w}"], tmp_path)
    assert code == 0 and rep["report"]["norm_spec"]["kind"] == "wsup"


def test_byte_identical_reports(mfile, tmp_path):
    _, _, out = _run(["analyze", "--matrix", str(mfile), "--norm", "l2", "--seed", "4"], tmp_path)
    first = out.read_bytes()
    out.unlink()
    _run(["analyze", "--matrix", str(mfile), "--norm", "l2", "--seed", "4"], tmp_path)
    assert out.read_bytes() == first


def test_timestamp_present_by_default(mfile, tmp_path):
    out = tmp_path / "t.json"
    assert run(["analyze", "--matrix", str(mfile), "--out", str(out)]) == 0
    assert "timestamp" in json.loads(out.read_text())


def test_input_errors(tmp_path, mfile):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["analyze", "--matrix", str(bad)]) == 2
    assert run(["analyze", "--matrix", str(tmp_path / "missing.json")]) == 2
    assert run(["analyze", "--matrix", str(mfile), "--norm", "l9z"]) == 2
    assert run(["analyze", "--matrix", str(mfile), "--exact-max-n", "2"]) == 2
    rect = tmp_path / "rect.json"
    rect.write_text(json.dumps({"rows": [[1.0, 2.0]]}))
    assert run(["analyze", "--matrix", str(rect)]) == 2
    assert run(["nonsense"]) == 2


def test_verify(tmp_path):
    code, rep, _ = _run(["verify", "--suite", "bounds", "--trials", "6", "--dims", "3,4"], tmp_path)
    assert code == 0 and rep["failures"] == 0
    code, rep, _ = _run(["verify", "--suite", "approximants", "--trials", "6", "--norms", "linf"],
                        tmp_path)
    assert code == 0 and "ck_two_eps[linf]" in rep["checks"]


def test_gallery_commands(tmp_path):
    code, rep, _ = _run(["gallery", "antidiagonal", "--eps", "0.1"], tmp_path)
    assert code == 0 and rep["eps"] == 0.1
    code, rep, _ = _run(["gallery", "walsh", "--i", "5"], tmp_path)
    assert code == 0 and rep["gap"] == pytest.approx(0.5)


def test_counterexamples(tmp_path):
    phi = tmp_path / "phi.json"
    phi.write_text(json.dumps({"breakpoints": [2.0 ** -13, 1.0], "values": [0.5, 0.5]}))
    code, rep, _ = _run(["counterexample", "e-lattice", "--n", "3", "--phi", str(phi)], tmp_path)
    assert code == 0 and rep["value"] == pytest.approx(0.5)
    assert len(rep["rechecked"]) == 2
    psi = tmp_path / "psi.json"
    psi.write_text(json.dumps({"entries": [0.5, 0.4], "limit": 0.5, "delta": 0.0}))
    code, rep, _ = _run(["counterexample", "renorm", "--phi", str(psi), "--eps", "0.01"], tmp_path)
    assert code == 0 and rep["value"] >= 0.5
    assert run(["counterexample", "renorm", "--phi", str(psi), "--eps", "2"]) == 2
    short = tmp_path / "short.json"
    short.write_text(json.dumps({"breakpoints": [0.5, 1.0], "values": [0.5, 0.5]}))
    assert run(["counterexample", "e-lattice", "--phi", str(short)]) == 2


def test_console_entry_point(mfile):
    res = subprocess.run([sys.executable, "-m", "latbp.cli", "analyze", "--matrix", str(mfile),
                          "--no-timestamp"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["command"] == "analyze"


def test_analyze_flags_inf_rho(tmp_path):
    # a pure off-diagonal matrix still yields a finite ρ at ε = dist
    p = tmp_path / "o.json"
    p.write_text(json.dumps({"n": 2, "rows": [[0.0, 1.0], [0.0, 0.0]]}))
    code, rep, _ = _run(["analyze", "--matrix", str(p), "--norm", "l1"], tmp_path)
    assert code == 0
    assert np.isfinite(rep["rho_center"]["rho_upper"])
