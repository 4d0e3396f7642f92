import json
import subprocess
import sys

import numpy as np
import pytest

from czmcal.cli import EXIT_CONFIG, EXIT_DATA, EXIT_MISMATCH, EXIT_OK, main
from czmcal.io import read_json, read_numeric_table

TINY = {
    "seed": 7,
    "geometry": {"n_elem": 40},
    "model": {"rates": [5.08, 508.0], "n_steps": 200, "delta_max": 16.0},
    "synth": {"noise_fraction": 0.01, "n_points": 12,
              "discrepancy": {"kind": "sine", "amplitude": 5000.0, "wavelength": 8.0}},
    "sampler": {"n_walkers": 18, "n_steps": 6, "n_elem": 20},
    "gp": {"n_train": 6, "popsize": 5, "maxiter": 5},
    "uq": {"n_samples": 12, "n_grid": 10},
    "sobol": {"n_base": 128, "n_bootstrap": 5, "n_elem": 20},
}


@pytest.fixture
def tiny_config(tmp_path):
    p = tmp_path / "tiny.json"
    p.write_text(json.dumps(TINY))
    return p


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_config_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"sampler": {"n_walkers": 3}}))
    assert main(["simulate", "--config", str(p), "--out-dir", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_missing_observations_is_config_error(tmp_path, capsys):
    rc = main(["calibrate", "--observations", str(tmp_path / "nope.csv"),
               "--out-dir", str(tmp_path / "o")])
    assert rc == EXIT_CONFIG


def test_data_error_exit_code(tmp_path, tiny_config, capsys):
    obs = tmp_path / "obs.csv"
    obs.write_text("rate_mm_per_min,Delta_mm,F_N\n5.08,1,2\n5.08,1,3\n")
    rc = main(["calibrate", "--config", str(tiny_config), "--observations", str(obs),
               "--out-dir", str(tmp_path / "o")])
    assert rc == EXIT_DATA
    assert "obs.csv:3" in capsys.readouterr().err


def test_simulate_writes_curves(tmp_path, tiny_config, capsys):
    out = tmp_path / "sim"
    assert main(["--config", str(tiny_config), "simulate", "--out-dir", str(out)]) == EXIT_OK
    cols, tab = read_numeric_table(out / "curve.csv")
    assert cols[:2] == ["rate_mm_per_min", "Delta_mm"]
    assert tab.shape == (2 * 201, len(cols))
    m = read_json(out / "manifest.json")
    assert m["command"] == "simulate" and m["seeds"]
    assert "simulate" in m["artifacts"]


def test_pipeline_and_rerun_are_bit_identical(tmp_path, tiny_config, capsys):
    out = tmp_path / "run"
    assert main(["pipeline", "--config", str(tiny_config), "--out-dir", str(out)]) == EXIT_OK
    m = read_json(out / "manifest.json")
    assert set(m["artifacts"]) == {"synth", "calibrate", "discrepancy", "uq", "sobol"}
    assert {"command", "config", "seeds", "inputs", "versions", "threads",
            "wall_time_s"} <= set(m)
    assert all(m["artifacts"].values())
    rc = main(["rerun", str(out / "manifest.json"), "--out-dir", str(tmp_path / "again")])
    assert rc == EXIT_OK
    assert "bit-identically" in capsys.readouterr().out
    again = read_json(tmp_path / "again" / "manifest.json")
    assert again["artifacts"] == m["artifacts"]


def test_rerun_detects_mismatch(tmp_path, tiny_config, capsys):
    out = tmp_path / "sim"
    main(["simulate", "--config", str(tiny_config), "--out-dir", str(out)])
    m = read_json(out / "manifest.json")
    name = next(iter(m["artifacts"]["simulate"]))
    m["artifacts"]["simulate"][name] = "0" * 64
    (out / "tampered.json").write_text(json.dumps(m))
    rc = main(["rerun", str(out / "tampered.json"), "--out-dir", str(tmp_path / "b")])
    assert rc == EXIT_MISMATCH
    assert name in capsys.readouterr().err


def test_threads_do_not_change_results(tmp_path, tiny_config, capsys):
    cfg = json.loads(tiny_config.read_text())
    cfg["model"]["rates"] = [5.08]
    p = tmp_path / "one.json"
    p.write_text(json.dumps(cfg))
    for t in ("1", "3"):
        assert main(["synth", "--config", str(p), "--threads", t,
                     "--out-dir", str(tmp_path / t)]) == EXIT_OK
    obs = tmp_path / "1" / "observations.csv"
    for t in ("1", "3"):
        assert main(["calibrate", "--config", str(p), "--observations", str(obs),
                     "--threads", t, "--out-dir", str(tmp_path / f"c{t}")]) == EXIT_OK
    a = read_numeric_table(tmp_path / "c1" / "posterior_samples.csv")[1]
    b = read_numeric_table(tmp_path / "c3" / "posterior_samples.csv")[1]
    assert a.tobytes() == b.tobytes()


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "czmcal.cli", "--help"], capture_output=True,
                       text=True)
    assert r.returncode == 0
    for cmd in ("simulate", "synth", "calibrate", "discrepancy", "uq", "sobol", "pipeline",
                "rerun"):
        assert cmd in r.stdout
