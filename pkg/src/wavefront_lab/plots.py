"""Report figures rendered to files alongside the delimited output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from wavefront_lab.detector import gabor_transform
from wavefront_lab.harness import RunReport, ScenarioConfig, load_snapshot


def scenario_figure(out_dir, config: ScenarioConfig, report: RunReport) -> list[str]:
    """One |u| panel per time with predicted and detected rays overlaid,
    plus a windowed-Fourier magnitude map of the final state."""
    out_dir = Path(out_dir)
    written = []
    stages = report.stages
    if not stages:
        return written

    fig, axes = plt.subplots(
        len(stages) + 1, 1, figsize=(8, 2.2 * (len(stages) + 1)), sharex=True
    )
    axes = np.atleast_1d(axes)
    state0 = load_snapshot(out_dir / "t0.npy")
    x = state0.axis()
    axes[0].plot(x, np.abs(state0.values), lw=0.8, color="k")
    axes[0].set_ylabel("|u|, t=0")
    for ax, stage in zip(axes[1:], stages):
        state = load_snapshot(out_dir / f"{stage['snapshot']['file']}")
        ax.plot(x, np.abs(state.values), lw=0.8, color="k")
        for r in stage["predicted"]["rays"]:
            ax.axvline(r["base"][0], color="tab:blue", ls="--", lw=1, alpha=0.8)
        for r in stage["detected"]["rays"]["rays"]:
            ax.axvline(r["base"][0], color="tab:red", ls=":", lw=1, alpha=0.8)
        ax.set_ylabel(f"|u|, t={stage['t']:.3g}")
    axes[-1].set_xlabel("x")
    fig.suptitle(f"{report.name}: predicted (dashed) vs detected (dotted) bases")
    fig.tight_layout()
    path = out_dir / "states.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path.name)

    last = load_snapshot(out_dir / f"{stages[-1]['snapshot']['file']}")
    det_cfg = config.raw.get("detector", {})
    h = sorted(det_cfg.get("scales", [0.02, 0.04, 0.08, 0.16]))[0]
    field = gabor_transform(last, h)
    order = np.argsort(field.kappa)
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.imshow(
        np.log10(np.maximum(field.magnitudes[:, order].T, 1e-16)),
        origin="lower",
        aspect="auto",
        extent=[field.centers[0], field.centers[-1], field.kappa.min(), field.kappa.max()],
        cmap="magma",
    )
    ax.set_xlabel("x")
    ax.set_ylabel("frequency")
    ax.set_title(f"{report.name}: window magnitudes (log10), h={h}, t={stages[-1]['t']:.3g}")
    fig.tight_layout()
    path = out_dir / "gabor.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path.name)
    return written
