"""Multi-scale Gaussian-window Fourier analysis of grid states.

A window of width sqrt(h) modulated to frequency kappa ~ 1/h probes whether
local Fourier content decays across scales.  Cells whose peak magnitude in
the scaled frequency band decays slower than the calibrated cutoff power of
h are singular; the same fields, read as phase-plane mass along directions
at increasing radii, estimate which phase-space directions obstruct rapid
decay.

All detector constants are calibration artifacts of the default grid, not
theoretical quantities; they are chosen so the smooth calibration family is
separated from the jump family with wide margin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from wavefront_lab.errors import InsufficientScalesError, ScaleError
from wavefront_lab.quantum import GridState
from wavefront_lab.wfpredict import IsoRay, Ray, WavefrontSet

DEFAULT_SCALES = (0.02, 0.04, 0.08, 0.16)
DEFAULT_THRESHOLD = 1e-3
SMOOTHNESS_CUTOFF = 2.0      # singular iff fitted power of h is below this
BAND = (1.0, 2.0)            # probed frequencies kappa in [BAND[0]/h, BAND[1]/h]
INTERIOR_FRACTION = 0.9      # centers beyond this fraction of L are the periodic seam
NOISE_FLOOR = 1e-12
ISO_RADII_FRACTIONS = (0.25, 1.0 / 3.0, 0.5)
ISO_DECAY_CUTOFF = -4.0      # iso-singular iff log-mass/log-radius slope is above this
ISO_MASS_FLOOR = 1e-10
ISO_N_BINS = 64


@dataclass
class GaborField:
    """Windowed-Fourier magnitudes of one state at one scale."""

    h: float
    centers: np.ndarray        # window center positions
    kappa: np.ndarray          # probed frequencies (FFT layout)
    magnitudes: np.ndarray     # shape (len(centers), len(kappa))
    frame_constant: float      # sum |V|^2 dx dkappa / (2 pi ||u||^2)


@dataclass
class DetectionResult:
    """Detected rays with the per-ray multi-scale decay exponents."""

    rays: WavefrontSet
    decay_exponents: list[float]
    threshold: float
    peak_score: float = 0.0

    def to_json(self) -> dict:
        return {
            "rays": self.rays.to_json(),
            "decay_exponents": self.decay_exponents,
            "threshold": self.threshold,
            "peak_score": self.peak_score,
        }


@dataclass
class ComparisonReport:
    """Directed Hausdorff comparison of detected against predicted rays."""

    verdict: str               # "PASS" or "FAIL"
    detected_to_predicted: float
    predicted_to_detected: float
    coverage: float            # fraction of predictions matched by a detection
    unmatched_detections: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "detected_to_predicted": self.detected_to_predicted,
            "predicted_to_detected": self.predicted_to_detected,
            "coverage": self.coverage,
            "unmatched_detections": self.unmatched_detections,
        }


def _require_1d(state: GridState) -> None:
    if state.d != 1:
        raise NotImplementedError("wavefront detection is implemented for d = 1")


def _check_scale(state: GridState, h: float) -> None:
    width = np.sqrt(h)
    if not (4.0 / state.n <= width <= state.L / 8.0):
        raise ScaleError(
            f"window width {width:.4g} outside resolvable band "
            f"[{4.0 / state.n:.4g}, {state.L / 8.0:.4g}]"
        )


def gabor_transform(state: GridState, h: float, centers: np.ndarray | None = None) -> GaborField:
    """Windowed Fourier magnitudes on a decimated grid of window centers.

    The window is (pi h)^{-1/4} exp(-(y - x)^2 / (2h)); magnitudes are
    |<u, g e^{i kappa .}>| for every FFT frequency kappa, normalized so the
    total squared mass integrates to about the frame constant times ||u||^2.
    """
    _require_1d(state)
    _check_scale(state, h)
    x = state.axis()
    dx = state.dx
    if centers is None:
        step = max(1, int(round(np.sqrt(h) / (2 * dx))))
        centers = x[::step]
    windows = (np.pi * h) ** -0.25 * np.exp(-((centers[:, None] - x[None, :]) ** 2) / (2 * h))
    spectra = np.fft.fft(state.values[None, :] * windows, axis=1) * dx / np.sqrt(2 * np.pi)
    kappa = 2 * np.pi * np.fft.fftfreq(state.n, d=dx)
    mags = np.abs(spectra)
    nrm2 = np.sum(np.abs(state.values) ** 2) * dx
    dc = centers[1] - centers[0] if centers.size > 1 else dx
    dk = kappa[1] - kappa[0]
    frame = float(np.sum(mags**2) * dc * dk / (2 * np.pi) / nrm2) if nrm2 > 0 else 0.0
    return GaborField(h=h, centers=centers, kappa=kappa, magnitudes=mags, frame_constant=frame)


def _band_peaks(fieldv: GaborField) -> tuple[np.ndarray, np.ndarray]:
    """Per-center peak magnitude in the scaled band, one column per sign."""
    lo, hi = BAND[0] / fieldv.h, BAND[1] / fieldv.h
    pos = (fieldv.kappa >= lo) & (fieldv.kappa <= hi)
    neg = (fieldv.kappa <= -lo) & (fieldv.kappa >= -hi)
    if not pos.any() or not neg.any():
        raise ScaleError(f"band [{lo:.3g}, {hi:.3g}] empty on this grid")
    return fieldv.magnitudes[:, pos].max(axis=1), fieldv.magnitudes[:, neg].max(axis=1)


def _validate_scales(scales) -> np.ndarray:
    hs = np.sort(np.asarray(list(scales), dtype=float))
    if hs.size < 3 or hs[-1] / hs[0] < 8.0:
        raise InsufficientScalesError("need at least 3 scales spanning a factor >= 8")
    return hs


def singularity_score(state: GridState, scales=DEFAULT_SCALES) -> float:
    """Peak band magnitude at the finest scale over interior centers, per unit norm."""
    hs = _validate_scales(scales)
    fieldv = gabor_transform(state, hs[0])
    interior = np.abs(fieldv.centers) <= INTERIOR_FRACTION * state.L
    p, m = _band_peaks(fieldv)
    nrm = state.norm()
    if nrm == 0:
        return 0.0
    return float(max(p[interior].max(), m[interior].max()) / nrm)


def detect_wf(
    state: GridState, scales=DEFAULT_SCALES, threshold: float = DEFAULT_THRESHOLD
) -> DetectionResult:
    """Estimate the wavefront set from the multi-scale decay of band peaks.

    For every window center and frequency sign, the peak band magnitude is
    fitted as a power of h across scales; cells decaying slower than the
    smoothness cutoff and peaking above threshold times the field maximum
    are clustered and refined to grid resolution.
    """
    _require_1d(state)
    hs = _validate_scales(scales)
    x = state.axis()
    dx = state.dx
    step = max(1, int(round(np.sqrt(hs[0]) / (2 * dx))))
    centers = x[::step]
    interior = np.abs(centers) <= INTERIOR_FRACTION * state.L

    peaks = np.empty((hs.size, centers.size, 2))
    for i, h in enumerate(hs):
        fieldv = gabor_transform(state, h, centers=centers)
        p, m = _band_peaks(fieldv)
        peaks[i, :, 0] = p
        peaks[i, :, 1] = m

    finest = peaks[0]
    fmax = finest[interior].max() if interior.any() else 0.0
    rays = WavefrontSet(compact_support=False, bound="exact")
    exponents: list[float] = []
    logh = np.log(hs)
    for sign_idx, sign in enumerate((1.0, -1.0)):
        col = finest[:, sign_idx]
        candidate = interior & (col > max(threshold * fmax, NOISE_FLOOR))
        if candidate.any():
            slopes = np.full(centers.size, np.inf)
            idx = np.where(candidate)[0]
            logm = np.log(np.maximum(peaks[:, idx, sign_idx], 1e-300))
            fit = np.polyfit(logh, logm, 1)
            slopes[idx] = fit[0]
            candidate &= slopes < SMOOTHNESS_CUTOFF
        if not candidate.any():
            continue
        # cluster contiguous candidate runs and refine each peak
        idx = np.where(candidate)[0]
        breaks = np.where(np.diff(idx) > 3)[0]
        for run in np.split(idx, breaks + 1):
            peak_i = run[np.argmax(col[run])]
            base = _refine_base(state, hs[0], centers[peak_i], sign, step)
            rays.add(Ray(base=[base], dir=[sign]))
            exponents.append(float(slopes[peak_i]))
    result = WavefrontSet(rays.rays, compact_support=False, bound="exact")
    score = float(fmax / state.norm()) if state.norm() > 0 else 0.0
    return DetectionResult(
        rays=result, decay_exponents=exponents, threshold=threshold, peak_score=score
    )


def _refine_base(state: GridState, h: float, center: float, sign: float, step: int) -> float:
    """Re-scan window centers at grid resolution around a coarse peak."""
    x = state.axis()
    dx = state.dx
    lo = center - (step + 1) * dx
    hi = center + (step + 1) * dx
    fine = x[(x >= lo) & (x <= hi)]
    fieldv = gabor_transform(state, h, centers=fine)
    p, m = _band_peaks(fieldv)
    col = p if sign > 0 else m
    return float(fine[np.argmax(col)])


def detect_wf_iso(state: GridState, scales=DEFAULT_SCALES) -> list[IsoRay]:
    """Estimate phase-space directions obstructing rapid decay.

    Window magnitudes are read as mass in the phase plane
    ((x - centroid), kappa L / kappa_Nyquist); for each angular bin the log
    mass at three radii is fitted against log radius, and bins failing the
    rapid-decay cutoff are reported with the direction of their peak cell at
    the largest radius.  Centering at the mass centroid removes the tilt a
    fixed singular position would otherwise impose on every radius.
    """
    _require_1d(state)
    hs = _validate_scales(scales)
    h = float(hs[len(hs) // 2])
    fieldv = gabor_transform(state, h)
    interior = np.abs(fieldv.centers) <= INTERIOR_FRACTION * state.L
    centers = fieldv.centers[interior]
    mags2 = fieldv.magnitudes[interior] ** 2
    dens = np.sum(mags2, axis=1)
    total = float(np.sum(dens))
    if total <= 0:
        return []
    centroid = float(np.sum(centers * dens) / total)
    k_nyq = np.pi / state.dx
    X = centers[:, None] - centroid
    Y = fieldv.kappa[None, :] * state.L / k_nyq
    R = np.hypot(X, np.broadcast_to(Y, (centers.size, fieldv.kappa.size)))
    theta = np.arctan2(np.broadcast_to(Y, R.shape), np.broadcast_to(X, R.shape))

    radii = np.array(ISO_RADII_FRACTIONS) * state.L
    ring_width = 0.08 * state.L
    bins = np.linspace(-np.pi, np.pi, ISO_N_BINS + 1)
    mass = np.zeros((radii.size, ISO_N_BINS))
    for i, r in enumerate(radii):
        ring = np.abs(R - r) < ring_width
        which = np.digitize(theta[ring], bins) - 1
        np.add.at(mass[i], np.clip(which, 0, ISO_N_BINS - 1), mags2[ring])
    mass /= total

    logr = np.log(radii)
    flagged = np.zeros(ISO_N_BINS, dtype=bool)
    for b in range(ISO_N_BINS):
        if mass[-1, b] < ISO_MASS_FLOOR:
            continue
        slope = np.polyfit(logr, np.log(np.maximum(mass[:, b], 1e-300)), 1)[0]
        flagged[b] = slope > ISO_DECAY_CUTOFF

    # merge adjacent flagged bins (circularly) and report one direction per
    # cluster: the mass-weighted mean over the outer ring, which tracks the
    # singular line rather than the bin edges
    out: list[IsoRay] = []
    outer = np.abs(R - radii[-1]) < ring_width
    visited = np.zeros(ISO_N_BINS, dtype=bool)
    for b in range(ISO_N_BINS):
        if not flagged[b] or visited[b]:
            continue
        cluster = [b]
        visited[b] = True
        for step in (1, -1):
            nb = (b + step) % ISO_N_BINS
            while flagged[nb] and not visited[nb]:
                cluster.append(nb)
                visited[nb] = True
                nb = (nb + step) % ISO_N_BINS
        in_cluster = np.zeros(R.shape, dtype=bool)
        for cb in cluster:
            in_cluster |= outer & (theta >= bins[cb]) & (theta < bins[cb + 1])
        if not in_cluster.any():
            continue
        w = mags2[in_cluster]
        vx = float(np.sum(w * np.broadcast_to(X, R.shape)[in_cluster]) / np.sum(w))
        vy = float(np.sum(w * np.broadcast_to(Y, R.shape)[in_cluster]) / np.sum(w))
        if np.hypot(vx, vy) > 0:
            out.append(IsoRay(dir=np.array([vx, vy])))
    return out


def _ray_distance(a: Ray, b: Ray) -> tuple[float, float]:
    base = float(np.linalg.norm(a.base - b.base))
    ang = float(np.arccos(np.clip(np.dot(a.dir, b.dir), -1.0, 1.0)))
    return base, ang


def compare_wf(
    predicted: WavefrontSet,
    detected: DetectionResult,
    base_tol: float,
    angle_tol: float,
) -> ComparisonReport:
    """PASS iff every detected ray matches a predicted ray within tolerance.

    The inclusion semantics of the propagation theorems make an empty
    detection a PASS; coverage of predictions by detections is reported as
    information only.
    """
    det = detected.rays.sorted()
    pred = predicted.sorted()

    def directed(src, dst):
        worst = 0.0
        unmatched = []
        for r in src:
            if not dst:
                worst = np.inf
                unmatched.append(r)
                continue
            pairs = [_ray_distance(r, q) for q in dst]
            score = min(max(b / max(base_tol, 1e-300), a / max(angle_tol, 1e-300)) for b, a in pairs)
            worst = max(worst, score)
            if score > 1.0:
                unmatched.append(r)
        return worst, unmatched

    d2p, unmatched = directed(det, pred)
    p2d, uncovered = directed(pred, det)
    coverage = 1.0 - len(uncovered) / len(pred) if pred else 1.0
    verdict = "PASS" if (not det or d2p <= 1.0) else "FAIL"
    return ComparisonReport(
        verdict=verdict,
        detected_to_predicted=float(d2p) if det else 0.0,
        predicted_to_detected=float(p2d) if pred else 0.0,
        coverage=float(coverage),
        unmatched_detections=[r.to_json() for r in unmatched],
    )
