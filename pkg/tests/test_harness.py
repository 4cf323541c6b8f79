"""Scenario configs, pipeline runs, persistence, determinism and the CLI."""

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from wavefront_lab.cli import main as cli_main
from wavefront_lab.errors import ConfigError
from wavefront_lab.harness import (
    ScenarioConfig,
    load_snapshot,
    run_scenario,
)
from wavefront_lab.recurrence import gamma_scan
from wavefront_lab.wfpredict import WavefrontSet, propagate_full

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "src" / "wavefront_lab" / "scenarios"


def mini_config(**overrides):
    cfg = {
        "version": 1,
        "name": "mini",
        "kind": "pipeline",
        "seed": 0,
        "symbol": {"omegas": [1.0]},
        "initial_data": {
            "family": "truncated_jump",
            "params": {"x0": 1.0},
            "rays": [
                {"base": [1.0], "dir": [1.0]},
                {"base": [1.0], "dir": [-1.0]},
            ],
            "compact_support": True,
        },
        "times": [np.pi],
        "solver": {"n": 512, "L": 12.0},
        "comparison": {"base_tol": 0.15, "angle_tol": 0.1},
    }
    cfg.update(overrides)
    return cfg


def test_bundled_scenarios_validate():
    paths = sorted(SCENARIO_DIR.glob("*.json"))
    assert len(paths) >= 3
    for path in paths:
        ScenarioConfig.load(path)


def test_config_rejects_unsorted_times():
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(mini_config(times=[2.0, 1.0]))


def test_config_rejects_unknown_fields():
    cfg = mini_config()
    cfg["unknown"] = 1
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(cfg)


def test_config_rejects_wrong_version():
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(mini_config(version=2))


def test_config_requires_initial_data_for_pipelines():
    cfg = mini_config()
    del cfg["initial_data"]
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(cfg)


def test_config_rejects_unknown_family():
    cfg = mini_config()
    cfg["initial_data"]["family"] = "sawtooth"
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(cfg)


def test_pipeline_run_passes(tmp_path):
    config = ScenarioConfig.from_dict(mini_config())
    report = run_scenario(config, tmp_path / "run")
    assert report.all_pass
    assert report.error is None
    stage = report.stages[0]
    assert stage["comparison"]["verdict"] == "PASS"
    assert stage["method"] == "quadratic-exact"
    assert stage["diagnostics"]["unitarity_drift"] <= 1e-6
    for name in ("report.json", "environment.json", "comparison.csv", "rays.csv",
                 "t0.npy", "t0.json", "t1.npy", "t1.json"):
        assert (tmp_path / "run" / name).exists()


def test_reports_deterministic(tmp_path):
    config = ScenarioConfig.from_dict(mini_config())
    run_scenario(config, tmp_path / "a")
    run_scenario(config, tmp_path / "b")
    assert (tmp_path / "a" / "report.json").read_bytes() == (
        tmp_path / "b" / "report.json"
    ).read_bytes()


def test_pipeline_integrity(tmp_path):
    """The embedded prediction equals recomputing wfpredict from the inputs."""
    config = ScenarioConfig.from_dict(mini_config())
    report = run_scenario(config, tmp_path / "run")
    stage = report.stages[0]
    p = config.symbol()
    cone = gamma_scan(p, stage["t"], seed=config.seed)
    again = propagate_full(config.declared_rays(), stage["t"], p, cone)
    stored = WavefrontSet.from_json(stage["predicted"])
    assert len(again) == len(stored)
    for a, b in zip(again.sorted(), stored.sorted()):
        assert np.allclose(a.base, b.base) and np.allclose(a.dir, b.dir)


def test_snapshot_round_trip(tmp_path):
    config = ScenarioConfig.from_dict(mini_config())
    report = run_scenario(config, tmp_path / "run")
    state = load_snapshot(tmp_path / "run" / "t1.npy")
    assert state.n == 512 and state.d == 1
    assert state.t == pytest.approx(np.pi)
    # content hash matches the report entry
    from wavefront_lab.harness import _hash_array

    assert _hash_array(state.values) == report.stages[0]["snapshot"]["sha256"]


def test_error_capture_confinement(tmp_path):
    cfg = mini_config(
        name="escape",
        initial_data={
            "family": "gaussian",
            "params": {"x0": 8.0, "sigma": 1.0},
            "rays": [],
            "compact_support": True,
        },
        times=[0.1],
        solver={
            "n": 512,
            "L": 12.0,
            "method": "splitstep",
            "dt": 0.01,
            "confinement_budget": 1e-12,
        },
    )
    report = run_scenario(ScenarioConfig.from_dict(cfg), tmp_path / "run")
    assert not report.all_pass
    assert report.error is not None
    assert report.error["type"] == "ConfinementError"


def test_scan_kind_reports_recurrence(tmp_path):
    cfg = {
        "version": 1,
        "name": "tiny-scan",
        "kind": "scan",
        "symbol": {"omegas": [2.0]},
        "recurrence": {"t_range": [1.5, 1.65], "resolution": 0.01, "tol": 1e-8},
    }
    report = run_scenario(ScenarioConfig.from_dict(cfg), tmp_path / "run")
    assert len(report.recurrence) == 1
    assert report.recurrence[0]["t"] == pytest.approx(np.pi / 2, abs=1e-6)


def test_figures_written(tmp_path):
    config = ScenarioConfig.from_dict(mini_config())
    run_scenario(config, tmp_path / "run")
    assert (tmp_path / "run" / "states.png").exists()
    assert (tmp_path / "run" / "gabor.png").exists()


# --- CLI ---


def write_config(tmp_path, cfg):
    path = tmp_path / f"{cfg['name']}.json"
    path.write_text(json.dumps(cfg))
    return path


def test_cli_validate_ok(tmp_path):
    path = write_config(tmp_path, mini_config())
    result = CliRunner().invoke(cli_main, ["validate", "--config", str(path)])
    assert result.exit_code == 0
    assert "OK" in result.output


def test_cli_validate_rejects_bad_config(tmp_path):
    path = write_config(tmp_path, mini_config(version=2))
    result = CliRunner().invoke(cli_main, ["validate", "--config", str(path)])
    assert result.exit_code == 2


def test_cli_run_pass_and_fail_exit_codes(tmp_path):
    good = write_config(tmp_path, mini_config())
    result = CliRunner().invoke(
        cli_main, ["run", "--config", str(good), "--out-dir", str(tmp_path / "out")]
    )
    assert result.exit_code == 0, result.output
    assert "mini: PASS" in result.output

    bad = mini_config(name="escape")
    bad["initial_data"] = {
        "family": "gaussian",
        "params": {"x0": 8.0, "sigma": 1.0},
        "rays": [],
        "compact_support": True,
    }
    bad["times"] = [0.1]
    bad["solver"] = {
        "n": 512,
        "L": 12.0,
        "method": "splitstep",
        "dt": 0.01,
        "confinement_budget": 1e-12,
    }
    path = write_config(tmp_path, bad)
    result = CliRunner().invoke(
        cli_main, ["run", "--config", str(path), "--out-dir", str(tmp_path / "out2")]
    )
    assert result.exit_code == 1
    assert "escape: FAIL" in result.output


def test_cli_scan(tmp_path):
    result = CliRunner().invoke(
        cli_main,
        ["scan", "--omega", "2", "--t-min", "1.5", "--t-max", "1.65"],
    )
    assert result.exit_code == 0, result.output
    assert "t = 1.5707963" in result.output


def test_cli_detect(tmp_path):
    config = ScenarioConfig.from_dict(mini_config())
    run_scenario(config, tmp_path / "run")
    result = CliRunner().invoke(
        cli_main, ["detect", "--snapshot", str(tmp_path / "run" / "t1.npy")]
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert len(payload["rays"]["rays"]) == 2
