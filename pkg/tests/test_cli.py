"""CLI contract: exit codes, file schemas, determinism, config validation."""

import json

import numpy as np
import pytest

from knucklesim.cli import CSV_HEADER, main
from knucklesim.config import ConfigError, load_config, parse_config
from knucklesim.validation import check_gravity_gradient, run_property_suite

FAST_SCENARIO = """
scenario:
  initial: {alpha: 0.0, beta: 0.3, gamma: 0.2, d: 9.0, theta1: 0.05, theta2: 0.05}
  reference: {alpha: 0.5, beta: 0.9, gamma: 0.6, d: 3.0}
  t_final: 2.0
  dt: 0.001
"""


def _write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# -- config validation ---------------------------------------------------------

def test_default_config_parses():
    cfg = parse_config({})
    assert cfg.params.m == 1.0
    assert set(cfg.controllers) == {"nonlinear", "lqr"}
    assert cfg.t_final == 90.0


def test_negative_reference_cable_names_assumption(tmp_path):
    path = _write(tmp_path, """
scenario:
  reference: {alpha: 0.0, beta: 0.0, gamma: 0.0, d: -1.0}
""")
    with pytest.raises(ConfigError) as excinfo:
        load_config(path)
    assert "Assumption 2" in str(excinfo.value)


def test_excessive_initial_swing_names_assumption(tmp_path):
    path = _write(tmp_path, """
scenario:
  initial: {alpha: 0.0, beta: 0.0, gamma: 0.0, d: 5.0, theta1: 1.6, theta2: 0.0}
""")
    with pytest.raises(ConfigError) as excinfo:
        load_config(path)
    assert "Assumption 1" in str(excinfo.value)


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "cranes: {}\n"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "crane: {mass: 3.0}\n"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "scenario: {horizon: 10.0}\n"))


def test_negative_mass_rejected(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        load_config(_write(tmp_path, "crane: {m_b: -1.0}\n"))
    assert "m_b" in str(excinfo.value)


def test_bad_gain_rejected(tmp_path):
    path = _write(tmp_path, """
controllers:
  nonlinear:
    gains: {kp_alpha: -5.0}
""")
    with pytest.raises(ConfigError):
        load_config(path)


# -- simulate ------------------------------------------------------------------

def test_simulate_writes_csv_and_metrics(tmp_path):
    cfg = _write(tmp_path, FAST_SCENARIO)
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--controller", "nonlinear",
                 "--out", str(out)]) == 0
    csv_path = out / "trajectory_nonlinear.csv"
    lines = csv_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + 2001  # header + floor(t_final/dt) + 1 rows
    assert all(len(line.split(",")) == 20 for line in lines[1:])

    payload = json.loads((out / "metrics_nonlinear.json").read_text())
    assert payload["controller"] == "nonlinear"
    assert "peak_theta1" in payload["metrics"]


def test_simulate_unknown_controller_is_config_error(tmp_path):
    cfg = _write(tmp_path, FAST_SCENARIO)
    assert main(["simulate", "--config", cfg, "--controller", "mpc",
                 "--out", str(tmp_path / "o")]) == 2


def test_simulate_invalid_config_exit_2(tmp_path, capsys):
    cfg = _write(tmp_path, "scenario:\n  reference: {d: -1.0}\n")
    assert main(["simulate", "--config", cfg, "--controller", "nonlinear",
                 "--out", str(tmp_path / "o")]) == 2
    assert "Assumption 2" in capsys.readouterr().err


def test_simulate_runtime_abort_exit_3(tmp_path, capsys):
    cfg = _write(tmp_path, """
scenario:
  initial: {alpha: 0.0, beta: 0.3, gamma: 0.2, d: 5.0, theta1: 0.0, theta2: 1.5}
  initial_velocity: {theta2: 1.5}
  reference: {alpha: 0.0, beta: 0.3, gamma: 0.2, d: 5.0}
  t_final: 5.0
controllers:
  open_loop: {}
""")
    assert main(["simulate", "--config", cfg, "--controller", "open_loop",
                 "--out", str(tmp_path / "o")]) == 3
    assert "step" in capsys.readouterr().err


def test_simulate_rerun_is_byte_identical(tmp_path):
    cfg = _write(tmp_path, FAST_SCENARIO)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert main(["simulate", "--config", cfg, "--controller", "nonlinear",
                     "--out", str(out)]) == 0
    for name in ("trajectory_nonlinear.csv", "metrics_nonlinear.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


# -- compare -------------------------------------------------------------------

def test_compare_requires_two_controllers(tmp_path):
    cfg = _write(tmp_path, FAST_SCENARIO + """
controllers:
  nonlinear: {}
""")
    assert main(["compare", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_compare_writes_schema_stable_outputs(tmp_path, capsys):
    cfg = _write(tmp_path, FAST_SCENARIO)
    out = tmp_path / "out"
    assert main(["compare", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "comparison.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "metric,lqr,nonlinear"
    names = [line.split(",")[0] for line in lines[1:]]
    assert names == ["settling_alpha", "settling_beta", "settling_gamma",
                     "settling_d", "peak_theta1", "peak_theta2",
                     "rms_theta1", "rms_theta2", "max_u1", "max_u2",
                     "max_u3", "max_u4", "objective_met"]
    assert (out / "trajectory_lqr.csv").exists()
    assert (out / "trajectory_nonlinear.csv").exists()
    table = capsys.readouterr().out
    assert "controller" in table and "peak|th1|" in table


def test_compare_rerun_byte_identical(tmp_path):
    cfg = _write(tmp_path, FAST_SCENARIO)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert main(["compare", "--config", cfg, "--out", str(out)]) == 0
    for name in ("comparison.csv", "trajectory_nonlinear.csv",
                 "trajectory_lqr.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_compare_parallel_matches_serial(tmp_path, monkeypatch):
    cfg = _write(tmp_path, FAST_SCENARIO)
    out_serial, out_par = tmp_path / "s", tmp_path / "p"
    assert main(["compare", "--config", cfg, "--out", str(out_serial)]) == 0
    monkeypatch.setenv("KNUCKLE_SIM_THREADS", "2")
    assert main(["compare", "--config", cfg, "--out", str(out_par)]) == 0
    assert (out_serial / "comparison.csv").read_bytes() == \
        (out_par / "comparison.csv").read_bytes()


# -- validate ------------------------------------------------------------------

def test_validate_passes_on_defaults(capsys):
    assert main(["validate", "--samples", "25"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5


def test_validate_rejects_bad_params(tmp_path, capsys):
    cfg = _write(tmp_path, "crane: {m_b: -1.0}\n")
    assert main(["validate", "--config", cfg]) == 2
    assert "m_b" in capsys.readouterr().err


def test_validate_seeded_report_is_reproducible(capsys):
    assert main(["validate", "--samples", "25", "--seed", "7"]) == 0
    first = capsys.readouterr().out
    assert main(["validate", "--samples", "25", "--seed", "7"]) == 0
    assert capsys.readouterr().out == first


def test_corrupted_gravity_is_detected(params):
    # negative control: a corrupted gravity vector must fail the gradient
    # property and report the offending state
    from knucklesim import gravity_vector

    def broken_gravity(q, p):
        g = gravity_vector(q, p)
        g[1] += 0.01 * (1.0 + abs(g[1]))
        return g

    rng = np.random.default_rng(3)
    report = check_gravity_gradient(params, rng, samples=20,
                                    gravity_fn=broken_gravity)
    assert not report.passed
    assert report.worst_state is not None
    assert "FAIL" in report.line()


def test_property_suite_all_green(params):
    reports = run_property_suite(params, seed=0, samples=30)
    assert len(reports) == 5
    assert all(r.passed for r in reports)
