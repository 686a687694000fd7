import json
import subprocess
import sys

import numpy as np
import pytest

from fltwave.cli import check_manifest, main

FAST_SIM = {
    "simulate": {
        "grid": {"x_min": -4.0, "x_max": 4.0, "dx": 0.02},
        "t_end": 1.0,
        "observer_dt": 0.25,
        "snapshots": [0.0, 1.0],
    }
}


def _cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def _matrix(path):
    rows = np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))
    return rows[:, 0], rows[:, 1:]


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_critical_speeds_command(tmp_path, capsys):
    out = tmp_path / "cs"
    assert main(["critical-speeds", "--out", str(out), "--tol", "1e-5", "--no-figures"]) == 0
    line = capsys.readouterr().out.strip().splitlines()[0]
    assert line.startswith("sigma_ent=0.43") and "sigma_smooth=0.66" in line
    doc = json.loads((out / "critical_speeds.json").read_text())
    assert abs(doc["sigma_ent"] - 0.437803) < 1e-3
    man = _manifest(out)
    assert man["command"] == "critical-speeds"
    assert {"params", "options", "outputs", "versions"} <= set(man)
    assert check_manifest(out)["problems"] == []


def test_figures_written(tmp_path):
    out = tmp_path / "fig"
    assert main(["critical-speeds", "--out", str(out), "--tol", "1e-4"]) == 0
    png = out / "critical_speeds.png"
    assert png.read_bytes()[:4] == b"\x89PNG"
    assert "critical_speeds.png" in json.dumps(_manifest(out)["outputs"])


def test_invalid_m_exit_2(tmp_path, capsys):
    cfg = _cfg(tmp_path, {"params": {"m": 1.0}})
    assert main(["critical-speeds", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["exit_code"] == 2
    assert json.loads((tmp_path / "o" / "error.json").read_text())["exit_code"] == 2


def test_missing_config_exit_2(tmp_path, capsys):
    code = main(["wave", "--sigma", "0.6", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "o")])
    assert code == 2
    assert json.loads(capsys.readouterr().err.strip())["error"] == "NotFound"


def test_bad_json_exit_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{nu: 1,0}")
    assert main(["critical-speeds", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_unknown_flag_exit_2(tmp_path):
    assert main(["wave", "--bogus"]) == 2


def test_wave_half_line(tmp_path):
    out = tmp_path / "w"
    assert main(["wave", "--sigma-kind", "ent", "--out", str(out), "--no-figures", "--asymptotics"]) == 0
    meta = json.loads((out / "profile.json").read_text())
    assert meta["kind"] == "HalfLine" and meta["u_minus"] == 0.0
    rows = np.loadtxt(out / "profile.csv", delimiter=",", skiprows=1)
    assert rows[-1].tolist() == [0.0, 0.0]
    assert np.all(rows[:-1, 0] <= 0.0)
    asym = json.loads((out / "asymptotics.json").read_text())
    assert abs(asym["exponent_left"] - 2 / 3) < 0.05


def test_wave_discontinuous(tmp_path):
    out = tmp_path / "w"
    assert main(["wave", "--sigma", "0.57", "--out", str(out), "--no-figures"]) == 0
    meta = json.loads((out / "profile.json").read_text())
    assert meta["kind"] == "Discontinuous"
    rows = np.loadtxt(out / "profile.csv", delimiter=",", skiprows=1)
    at0 = rows[rows[:, 0] == 0.0, 1]
    assert at0 == pytest.approx([meta["u_plus"], meta["u_minus"]])
    assert meta["u_plus"] + meta["u_minus"] == pytest.approx(0.57, abs=1e-8)


def test_wave_below_entropic_exit_3(tmp_path, capsys):
    assert main(["wave", "--sigma", "0.3", "--out", str(tmp_path / "o")]) == 3
    assert json.loads(capsys.readouterr().err.strip())["error"] == "SpeedBelowEntropic"


def test_wave_needs_speed(tmp_path):
    assert main(["wave", "--out", str(tmp_path / "o")]) == 2


def test_sweep(tmp_path):
    out = tmp_path / "s"
    code = main(["sweep", "--sigmas", "0.45,0.5,0.57,0.661621,1.0", "--out", str(out),
                 "--jobs", "2", "--no-figures"])
    assert code == 0
    sig, sup = _matrix(out / "distances_sup.csv")
    _, l1 = _matrix(out / "distances_l1.csv")
    assert sig.tolist() == [0.45, 0.5, 0.57, 0.661621, 1.0]
    assert sup.shape == l1.shape == (5, 5)
    np.testing.assert_allclose(sup, sup.T)
    assert np.all(np.diag(sup) == 0) and np.all(np.diag(l1) == 0)
    assert len(list(out.glob("profile_*.csv"))) == 5
    assert check_manifest(out)["problems"] == []


def test_sweep_singleton_and_empty(tmp_path):
    out = tmp_path / "one"
    assert main(["sweep", "--sigmas", "0.8", "--out", str(out), "--no-figures"]) == 0
    _, m = _matrix(out / "distances_sup.csv")
    assert m.shape == (1, 1) and m[0, 0] == 0.0
    assert main(["sweep", "--sigmas", "", "--out", str(tmp_path / "e")]) == 2


def test_sweep_isolates_errors(tmp_path):
    out = tmp_path / "s"
    assert main(["sweep", "--sigmas", "0.3,0.8", "--out", str(out), "--no-figures"]) == 0
    doc = json.loads((out / "sweep.json").read_text())
    assert len(doc["errors"]) == 1 and doc["built"] == [0.8]


def test_simulate_fast(tmp_path):
    out = tmp_path / "sim"
    cfg = _cfg(tmp_path, FAST_SIM)
    assert main(["simulate", "--config", cfg, "--out", str(out), "--compare-tw", "ent"]) == 0
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["summary"]["compare_tw"]["kind"] == "HalfLine"
    assert (out / "front_trace.csv").exists() and (out / "simulation.png").exists()
    assert len(list(out.glob("snapshot_*.csv"))) == 2
    assert check_manifest(out)["problems"] == []


def test_simulate_bad_t_end(tmp_path):
    cfg = _cfg(tmp_path, FAST_SIM)
    assert main(["simulate", "--config", cfg, "--t-end", "0", "--out", str(tmp_path / "o")]) == 2


def test_manifest_check_detects_tampering(tmp_path):
    out = tmp_path / "cs"
    assert main(["critical-speeds", "--out", str(out), "--tol", "1e-4", "--no-figures"]) == 0
    assert main(["critical-speeds", "--out", str(out), "--check"]) == 0
    (out / "critical_speeds.json").write_text("{}")
    assert main(["critical-speeds", "--out", str(out), "--check"]) == 2
    assert check_manifest(out)["problems"]


def test_deterministic_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["wave", "--sigma", "0.8", "--out", str(d), "--no-figures"]) == 0
    assert (a / "profile.csv").read_bytes() == (b / "profile.csv").read_bytes()


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "fltwave.cli", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()
