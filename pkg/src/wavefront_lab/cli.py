"""Command-line entry points."""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from wavefront_lab.errors import ConfigError, WavefrontLabError


@click.group()
def main():
    """Wavefront prediction, propagation and detection experiments."""


def _run_one(args):
    from wavefront_lab.harness import ScenarioConfig, run_scenario

    config_path, out_dir, seed = args
    config = ScenarioConfig.load(config_path)
    if seed is not None:
        config.raw["seed"] = seed
    report = run_scenario(config, Path(out_dir) / config.name)
    return config.name, report.all_pass, report.error


@main.command()
@click.option("--config", "configs", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--out-dir", default="runs", show_default=True, type=click.Path())
@click.option("--seed", default=None, type=int, help="Override the config seed.")
@click.option("--jobs", default=1, show_default=True, type=int)
def run(configs, out_dir, seed, jobs):
    """Run scenario pipelines; exit 0 iff every comparison passes."""
    cache = os.environ.get("WAVEFRONT_LAB_CACHE")
    if cache:
        out_dir = cache
    tasks = [(c, out_dir, seed) for c in configs]
    try:
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run_one, tasks))
        else:
            results = [_run_one(t) for t in tasks]
    except ConfigError as exc:
        click.echo(f"CONFIG ERROR: {exc}", err=True)
        sys.exit(2)
    ok = True
    for name, passed, error in results:
        status = "PASS" if passed else "FAIL"
        click.echo(f"{name}: {status}" + (f" ({error['type']}: {error['message']})" if error else ""))
        ok &= passed
    sys.exit(0 if ok else 1)


@main.command()
@click.option("--omega", required=True, help="Comma-separated positive frequencies.")
@click.option("--t-min", default=0.1, show_default=True, type=float)
@click.option("--t-max", required=True, type=float)
@click.option("--resolution", default=1e-2, show_default=True, type=float)
@click.option("--tol", default=1e-8, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
def scan(omega, t_min, t_max, resolution, tol, seed):
    """Scan a time window for recurrent codirections."""
    from wavefront_lab.recurrence import recurrence_times
    from wavefront_lab.symbols import ClassicalSymbol

    omegas = np.array([float(w) for w in omega.split(",")])
    p = ClassicalSymbol.oscillator(omegas)
    found = recurrence_times(p, (t_min, t_max), resolution=resolution, tol=tol, seed=seed)
    for t, cone in found:
        excesses = sorted({c.excess for c in cone.directions})
        click.echo(f"t = {t:.10f}  directions = {len(cone)}  e = {excesses}")
    if not found:
        click.echo("no recurrence times found")


@main.command()
@click.option("--snapshot", required=True, type=click.Path(exists=True))
@click.option("--scales", default="0.02,0.04,0.08,0.16", show_default=True)
@click.option("--threshold", default=1e-3, show_default=True, type=float)
def detect(snapshot, scales, threshold):
    """Detect singular rays in a stored state snapshot."""
    from wavefront_lab.detector import detect_wf
    from wavefront_lab.harness import load_snapshot

    state = load_snapshot(snapshot)
    hs = [float(s) for s in scales.split(",")]
    try:
        result = detect_wf(state, scales=hs, threshold=threshold)
    except WavefrontLabError as exc:
        click.echo(f"ERROR: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps(result.to_json(), sort_keys=True, indent=1))


@main.command()
@click.option("--suite", default="default", show_default=True)
@click.option("--alpha-max", default=2, show_default=True, type=int)
@click.option("--out", default=None, type=click.Path(), help="CSV output path.")
def statphase(suite, alpha_max, out):
    """Verify boundedness of the oscillatory-integral suite."""
    from wavefront_lab.statphase import default_suite, verify_boundedness

    if suite != "default":
        click.echo(f"unknown suite {suite!r}", err=True)
        sys.exit(2)
    rows = []
    all_pass = True
    for prob in default_suite():
        report = verify_boundedness(prob, alpha_max)
        all_pass &= report.passed
        rows.extend(f"{prob.name},{line}" for line in list(report.to_csv_rows())[1:])
        click.echo(f"{prob.name}: {'PASS' if report.passed else 'FAIL'}")
    if out:
        header = "problem,alpha,y,lambda,abs_dI,fitted_slope,pass"
        Path(out).write_text("\n".join([header] + rows) + "\n")
    sys.exit(0 if all_pass else 1)


@main.command()
@click.option("--config", required=True, type=click.Path(exists=True))
def validate(config):
    """Validate a scenario config against the schema."""
    from wavefront_lab.harness import ScenarioConfig

    try:
        ScenarioConfig.load(config)
    except ConfigError as exc:
        click.echo(f"INVALID: {exc}", err=True)
        sys.exit(2)
    click.echo("OK")


if __name__ == "__main__":
    main()
