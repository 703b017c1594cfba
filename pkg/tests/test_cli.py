import json
import logging
import os
from pathlib import Path

import numpy as np
import pytest

from gravcat.cli import ConfigError, load_config, run

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
GOLDEN = Path(__file__).parent / "golden"

# (name, subcommand, config, extra args); report.json must match byte for byte
GOLDEN_RUNS = [
    ("small_cat", "estimate", "small_cat.kv", []),
    ("tantalum", "estimate", "tantalum_cat.kv", []),
    ("trap", "trap", "pb_reference.kv", []),
    ("proposals", "feasibility", "proposals_all.kv", []),
    ("levers", "optimize", "optimize_levers.kv", []),
    ("telegraph", "simulate-classical", "telegraph.kv", ["--seed", "3", "--set", "n_traj=2000"]),
]


def invoke(tmp_path, *args):
    out = tmp_path / "out"
    code = run([*args, "--out", str(out)])
    return code, out


def write_config(tmp_path, text, name="cfg.kv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_estimate_small_cat(tmp_path, capsys):
    code, out = invoke(tmp_path, "estimate", "--config", str(CONFIGS / "small_cat.kv"))
    assert code == 0
    text = capsys.readouterr().out
    assert "f0 = 1.9e-30 N" in text
    assert "9.9 orders" in text
    data = json.loads((out / "report.json").read_text())
    assert data["subcommand"] == "estimate" and data["seed"] == 0
    assert (out / "report.txt").read_text() == text


def test_trap_reference(tmp_path, capsys):
    code, _ = invoke(tmp_path, "trap", "--config", str(CONFIGS / "pb_reference.kv"), "--format", "table")
    assert code == 0
    text = capsys.readouterr().out
    assert "2pi x 26.8 kHz" in text
    assert "all validations pass" in text


def test_missing_config_exits_2(tmp_path, capsys):
    missing = tmp_path / "missing.kv"
    code, _ = invoke(tmp_path, "estimate", "--config", str(missing))
    assert code == 2
    assert str(missing) in capsys.readouterr().err


def test_unknown_key_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, "m = 4 ng\nL = 1 pm\nD = 3 um\nM = 1 ng\nwavelength = 3 m\n")
    code, _ = invoke(tmp_path, "estimate", "--config", str(cfg))
    assert code == 2
    err = capsys.readouterr().err
    assert "wavelength" in err and str(cfg) in err


def test_dimension_mismatch_names_key(tmp_path):
    cfg = write_config(tmp_path, "m = 4 ng\nL = 3 kg\nD = 3 um\nM = 1 ng\n")
    with pytest.raises(ConfigError, match="'L'.*dimension mismatch"):
        load_config(cfg, "estimate")


def test_missing_required_key(tmp_path):
    cfg = write_config(tmp_path, "m = 4 ng\n")
    with pytest.raises(ConfigError, match="missing required key 'L'"):
        load_config(cfg, "estimate")


def test_values_are_typed(tmp_path):
    cfg = write_config(tmp_path, "M = 0.38 ng  # source\nm = 4.0 ng\nL = 1 pm\nD = 3 um\n")
    values = load_config(cfg, "estimate")
    assert values["M"] == 3.8e-13
    assert values["L"] == 1e-12


def test_duplicate_key_last_wins(tmp_path, caplog):
    cfg = write_config(tmp_path, "m = 4 ng\nL = 1 pm\nL = 2 pm\n")
    with caplog.at_level(logging.WARNING):
        values = load_config(cfg, "estimate")
    assert values["L"] == 2e-12
    assert any("L" in r.getMessage() for r in caplog.records if r.levelno == logging.WARNING)


def test_overrides_apply_after_file(tmp_path, capsys):
    code, out = invoke(tmp_path, "estimate", "--config", str(CONFIGS / "small_cat.kv"),
                       "--set", "L=2 pm", "--format", "json")
    assert code == 0
    data = json.loads((out / "report.json").read_text())
    assert data["result"]["f0_N"] == pytest.approx(2 * 1.879e-30, rel=1e-3)


def test_malformed_override_exits_2(tmp_path):
    code, _ = invoke(tmp_path, "estimate", "--config", str(CONFIGS / "small_cat.kv"), "--set", "L")
    assert code == 2


def test_computational_error_exits_1(tmp_path, capsys):
    cfg = write_config(tmp_path, "f0 = 1 N\nGamma = 1 1/s\ndt = 0.5 s\nt_max = 5 s\nn_traj = 10\n")
    code, _ = invoke(tmp_path, "simulate-classical", "--config", str(cfg))
    assert code == 1
    assert "StepTooCoarse" in capsys.readouterr().err


def test_simulate_classical_writes_trajectories(tmp_path):
    cfg = write_config(tmp_path, "f0 = 1 N\nGamma = 1 1/s\ndt = 0.1 s\nt_max = 2 s\nn_traj = 50\n"
                                 "save_trajectories = yes\n")
    code, out = invoke(tmp_path, "simulate-classical", "--config", str(cfg))
    assert code == 0
    header = (out / "trajectories.csv").read_text().splitlines()[0]
    assert header.startswith("t,traj_0,traj_1")


def test_simulate_quantum_outputs(tmp_path):
    cfg = write_config(tmp_path, "m = 100 ng\nomega = 1 rad/s\nf0 = 1.5e-22 N\nnu = 0.2 rad/s\n"
                                 "t_max = 200 s\nn_times = 512\n")
    code, out = invoke(tmp_path, "simulate-quantum", "--config", str(cfg))
    assert code == 0
    assert (out / "observables.csv").read_text().splitlines()[0] == "t,sigma3,number,position"
    assert (out / "spectrum.csv").read_text().splitlines()[0] == "omega,power"
    for name, width in (("observables.csv", 4), ("spectrum.csv", 2)):
        rows = np.loadtxt(out / name, delimiter=",", skiprows=1)
        assert rows.shape[1] == width and np.all(np.isfinite(rows))
    data = json.loads((out / "report.json").read_text())["result"]
    assert data["norm_drift"] <= 1e-10


@pytest.mark.parametrize("name, sub, config, extra", GOLDEN_RUNS)
def test_golden_outputs(tmp_path, name, sub, config, extra):
    code, out = invoke(tmp_path, sub, "--config", str(CONFIGS / config), *extra)
    assert code == 0
    produced = (out / "report.json").read_bytes()
    golden = GOLDEN / name / "report.json"
    if os.environ.get("GRAVCAT_REGEN_GOLDEN"):
        golden.parent.mkdir(parents=True, exist_ok=True)
        golden.write_bytes(produced)
    assert produced == golden.read_bytes()
    # a second run is bit-identical too
    code, again = invoke(tmp_path / "again", sub, "--config", str(CONFIGS / config), *extra)
    assert (again / "report.json").read_bytes() == produced
