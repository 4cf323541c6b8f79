"""Scenario configs and the end-to-end predict / solve / detect / compare pipeline.

A scenario couples a symbol, an initial state with declared singular rays, a
time list, solver and detector settings, and comparison tolerances.  Reports
are deterministic for a fixed config and seed: the environment fingerprint
(timestamps, versions) is quarantined to a sidecar file and every stored
array is referenced by its content hash.
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
import time as _time
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from wavefront_lab import __version__
from wavefront_lab.errors import ConfigError, WavefrontLabError
from wavefront_lab.detector import (
    DEFAULT_SCALES,
    DEFAULT_THRESHOLD,
    compare_wf,
    detect_wf,
    detect_wf_iso,
    singularity_score,
)
from wavefront_lab.flow import HamiltonianFlow
from wavefront_lab.quantum import (
    GridState,
    QuadraticHamiltonianSpec,
    affine_propagate,
    make_gaussian,
    make_smooth_bump,
    make_spike,
    make_truncated_jump,
    mehler_propagate,
    splitstep_propagate,
)
from wavefront_lab.recurrence import gamma_scan, recurrence_times
from wavefront_lab.symbols import ClassicalSymbol, HomogeneousComponent
from wavefront_lab.wfpredict import Ray, WavefrontSet, propagate_full

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["version", "name", "symbol"],
    "properties": {
        "version": {"const": 1},
        "name": {"type": "string"},
        "kind": {"enum": ["pipeline", "scan"]},
        "seed": {"type": "integer"},
        "symbol": {
            "type": "object",
            "required": ["omegas"],
            "properties": {
                "omegas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "b": {"type": "array", "items": {"type": "number"}},
                "c": {"type": "array", "items": {"type": "number"}},
            },
            "additionalProperties": False,
        },
        "initial_data": {
            "type": "object",
            "required": ["family"],
            "properties": {
                "family": {"enum": ["truncated_jump", "gaussian", "spike", "smooth_bump"]},
                "params": {"type": "object"},
                "rays": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["base", "dir"],
                        "properties": {
                            "base": {"type": "array", "items": {"type": "number"}},
                            "dir": {"type": "array", "items": {"type": "number"}},
                        },
                    },
                },
                "compact_support": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "times": {"type": "array", "items": {"type": "number"}},
        "solver": {
            "type": "object",
            "properties": {
                "n": {"type": "integer", "minimum": 16},
                "L": {"type": "number", "exclusiveMinimum": 0},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "method": {"enum": ["auto", "exact", "splitstep"]},
                "confinement_budget": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "detector": {
            "type": "object",
            "properties": {
                "scales": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "threshold": {"type": "number", "exclusiveMinimum": 0},
                "iso": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "comparison": {
            "type": "object",
            "properties": {
                "base_tol": {"type": "number", "exclusiveMinimum": 0},
                "angle_tol": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "recurrence": {
            "type": "object",
            "properties": {
                "t_range": {
                    "type": "array",
                    "items": {"type": "number"},
                    "minItems": 2,
                    "maxItems": 2,
                },
                "resolution": {"type": "number", "exclusiveMinimum": 0},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_FAMILIES = {
    "truncated_jump": make_truncated_jump,
    "gaussian": make_gaussian,
    "spike": make_spike,
    "smooth_bump": make_smooth_bump,
}


@dataclass
class ScenarioConfig:
    """Validated scenario configuration."""

    raw: dict

    @staticmethod
    def load(path) -> "ScenarioConfig":
        with open(path) as fh:
            return ScenarioConfig.from_dict(json.load(fh))

    @staticmethod
    def from_dict(obj: dict) -> "ScenarioConfig":
        try:
            jsonschema.validate(obj, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid scenario config: {exc.message}") from exc
        times = obj.get("times", [])
        if sorted(times) != list(times):
            raise ConfigError("times must be sorted ascending")
        if obj.get("kind", "pipeline") == "pipeline" and "initial_data" not in obj:
            raise ConfigError("pipeline scenarios require initial_data")
        return ScenarioConfig(raw=obj)

    @property
    def name(self) -> str:
        return self.raw["name"]

    @property
    def kind(self) -> str:
        return self.raw.get("kind", "pipeline")

    @property
    def seed(self) -> int:
        return self.raw.get("seed", 0)

    def symbol(self) -> ClassicalSymbol:
        sym = self.raw["symbol"]
        omegas = np.asarray(sym["omegas"], float)
        b = np.asarray(sym.get("b", np.zeros_like(omegas)), float)
        c = np.asarray(sym.get("c", np.zeros_like(omegas)), float)
        p1 = None
        if np.any(b) or np.any(c):
            p1 = HomogeneousComponent.linear(c, b)
        return ClassicalSymbol.oscillator(omegas, p1)

    def hamiltonian_spec(self) -> QuadraticHamiltonianSpec:
        sym = self.raw["symbol"]
        return QuadraticHamiltonianSpec(
            omegas=np.asarray(sym["omegas"], float),
            b=np.asarray(sym.get("b", [0.0] * len(sym["omegas"])), float),
            c=np.asarray(sym.get("c", [0.0] * len(sym["omegas"])), float),
        )

    def initial_state(self) -> GridState:
        solver = self.raw.get("solver", {})
        n = solver.get("n", 2048)
        L = solver.get("L", 12.0)
        data = self.raw["initial_data"]
        x = -L + (2 * L / n) * np.arange(n)
        values = _FAMILIES[data["family"]](x, **data.get("params", {}))
        return GridState(d=1, n=n, L=L, values=values)

    def declared_rays(self) -> WavefrontSet:
        data = self.raw["initial_data"]
        return WavefrontSet(
            [Ray(base=r["base"], dir=r["dir"]) for r in data.get("rays", [])],
            compact_support=data.get("compact_support", True),
            bound="exact",
        )


def _hash_array(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()


def _save_snapshot(out_dir: Path, tag: str, state: GridState) -> dict:
    path = out_dir / f"{tag}.npy"
    np.save(path, state.values)
    sidecar = {"d": state.d, "n": state.n, "L": state.L, "t": state.t}
    with open(out_dir / f"{tag}.json", "w") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=1)
    return {"file": path.name, "sha256": _hash_array(state.values), **sidecar}


def load_snapshot(path) -> GridState:
    path = Path(path)
    values = np.load(path)
    with open(path.with_suffix(".json")) as fh:
        meta = json.load(fh)
    return GridState(d=meta["d"], n=meta["n"], L=meta["L"], values=values, t=meta["t"])


@dataclass
class RunReport:
    """Everything a scenario run produced, traceable to stored inputs."""

    name: str
    config: dict
    stages: list = field(default_factory=list)
    recurrence: list = field(default_factory=list)
    all_pass: bool = True
    error: dict | None = None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "config": self.config,
            "stages": self.stages,
            "recurrence": self.recurrence,
            "all_pass": self.all_pass,
            "error": self.error,
        }


def _solve(state, t, cfg: ScenarioConfig):
    solver = cfg.raw.get("solver", {})
    spec = cfg.hamiltonian_spec()
    method = solver.get("method", "auto")
    if method in ("auto", "exact"):
        if spec.perturbation_free:
            return mehler_propagate(state, t, spec), "quadratic-exact"
        return affine_propagate(state, t, spec), "affine-exact"
    return (
        splitstep_propagate(
            state,
            t,
            spec,
            solver.get("dt", 1e-3),
            confinement_budget=solver.get("confinement_budget", 1e-3),
        ),
        "splitstep",
    )


def run_scenario(config: ScenarioConfig, out_dir) -> RunReport:
    """Execute predict -> solve -> detect -> compare for every configured time."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = RunReport(name=config.name, config=config.raw)
    p = config.symbol()
    flow = HamiltonianFlow(p)

    rec_cfg = config.raw.get("recurrence")
    if rec_cfg is not None:
        found = recurrence_times(
            p,
            tuple(rec_cfg["t_range"]),
            resolution=rec_cfg.get("resolution", 1e-2),
            tol=rec_cfg.get("tol", 1e-8),
            seed=config.seed,
        )
        report.recurrence = [
            {"t": t, "cone": cone.to_json()} for t, cone in found
        ]

    if config.kind == "scan":
        _write_report(out_dir, report)
        return report

    det_cfg = config.raw.get("detector", {})
    scales = det_cfg.get("scales", list(DEFAULT_SCALES))
    threshold = det_cfg.get("threshold", DEFAULT_THRESHOLD)
    cmp_cfg = config.raw.get("comparison", {})
    state0 = config.initial_state()
    base_tol = cmp_cfg.get("base_tol", 2 * state0.dx)
    angle_tol = cmp_cfg.get("angle_tol", 0.1)
    declared = config.declared_rays()
    snapshots = [_save_snapshot(out_dir, "t0", state0)]
    score0 = singularity_score(state0, scales)

    try:
        for i, t in enumerate(config.raw.get("times", [])):
            cone = gamma_scan(p, t, seed=config.seed)
            predicted = propagate_full(declared, t, p, cone, flow=flow)
            solved, method = _solve(state0, t, config)
            snap = _save_snapshot(out_dir, f"t{i + 1}", solved)
            detected = detect_wf(solved, scales=scales, threshold=threshold)
            comparison = compare_wf(predicted, detected, base_tol, angle_tol)
            score_t = singularity_score(solved, scales)
            stage = {
                "t": t,
                "method": method,
                "predicted": predicted.to_json(),
                "detected": detected.to_json(),
                "comparison": comparison.to_json(),
                "empty": len(detected.rays) == 0,
                "score_ratio_vs_t0": score0 / max(score_t, 1e-300),
                "cone_summary": {
                    "n_directions": len(cone),
                    "excess": [c.excess for c in cone.directions],
                },
                "diagnostics": {
                    "unitarity_drift": abs(solved.norm() - state0.norm()),
                    "boundary_mass": solved.boundary_mass(),
                },
                "snapshot": snap,
            }
            if det_cfg.get("iso", False):
                stage["detected_iso"] = [
                    list(map(float, r.dir)) for r in detect_wf_iso(solved, scales)
                ]
            report.all_pass &= comparison.verdict == "PASS"
            report.stages.append(stage)
    except WavefrontLabError as exc:
        report.error = {"stage": f"t={t}", "type": type(exc).__name__, "message": str(exc)}
        report.all_pass = False

    report.config = dict(config.raw)
    _write_csvs(out_dir, report)
    _write_report(out_dir, report, snapshots + [s["snapshot"] for s in report.stages])
    _write_plots(out_dir, config, report)
    return report


def _write_report(out_dir: Path, report: RunReport, snapshots=None) -> None:
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report.to_json(), fh, sort_keys=True, indent=1)
    fingerprint = {
        "package_version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "platform": platform.platform(),
        "timestamp": _time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    with open(out_dir / "environment.json", "w") as fh:
        json.dump(fingerprint, fh, sort_keys=True, indent=1)


def _write_csvs(out_dir: Path, report: RunReport) -> None:
    with open(out_dir / "comparison.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t", "verdict", "detected_to_predicted", "predicted_to_detected", "coverage"]
        )
        for s in report.stages:
            c = s["comparison"]
            writer.writerow(
                [s["t"], c["verdict"], c["detected_to_predicted"],
                 c["predicted_to_detected"], c["coverage"]]
            )
    with open(out_dir / "rays.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "kind", "base", "dir", "weight"])
        for s in report.stages:
            for kind, ws in (("predicted", s["predicted"]), ("detected", s["detected"]["rays"])):
                for r in ws["rays"]:
                    writer.writerow([s["t"], kind, r["base"][0], r["dir"][0], r["weight"]])


def _write_plots(out_dir: Path, config: ScenarioConfig, report: RunReport) -> None:
    from wavefront_lab import plots

    try:
        plots.scenario_figure(out_dir, config, report)
    except Exception:  # plotting must never fail a run
        pass
