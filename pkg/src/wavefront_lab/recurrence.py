"""Recurrence geometry: the cone of returning codirections and its tangent data.

For a time t the cone collects unit codirections eta whose flow through the
fiber over 0 returns to the fiber over 0, together with the returned
codirection, an orthonormal tangent basis and the excess (how degenerate the
return is).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from wavefront_lab.errors import CleanIntersectionError, IllConditionedExcessError
from wavefront_lab.flow import HamiltonianFlow
from wavefront_lab.symbols import ClassicalSymbol, validate

DEDUP_ANGLE = 1e-6
RANK_CUTOFF = 1e-6          # relative singular-value cutoff for the excess rank
ILL_BAND = (1e-8, 1e-4)     # relative band that raises instead of guessing
NEIGHBOR_RADIUS = 0.1       # angular radius for the tangent-space fit


@dataclass
class ConeDirection:
    """One recurrent codirection with its return data."""

    eta: np.ndarray
    xi: np.ndarray
    excess: int
    tangent_basis: np.ndarray  # shape (e, d), rows orthonormal, includes eta
    residual: float

    def to_json(self) -> dict:
        return {
            "eta": self.eta.tolist(),
            "xi": self.xi.tolist(),
            "e": self.excess,
            "tangent_basis": [row.tolist() for row in self.tangent_basis],
            "residual": self.residual,
        }


@dataclass
class RecurrenceCone:
    """Sampled Gamma_t with per-direction return maps, tangent bases and excess."""

    t: float
    tol: float
    directions: list[ConeDirection] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.directions)

    @property
    def empty(self) -> bool:
        return not self.directions

    def etas(self) -> np.ndarray:
        return np.array([c.eta for c in self.directions]).reshape(len(self.directions), -1)

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "tol": self.tol,
            "directions": [c.to_json() for c in self.directions],
        }


def _sphere_seeds(d: int, n: int, seed: int = 0) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        angles = 2 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(angles), np.sin(angles)])
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, d))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _x_residual(flow: HamiltonianFlow, t: float, eta: np.ndarray):
    """x(t, 0, eta) and its eta-Jacobian block."""
    d = eta.size
    z0 = np.concatenate([np.zeros(d), eta])
    fm = flow.at(t, z0)
    return fm.value.x, fm.jacobian[:d, d:], fm.jacobian

def refine_direction(
    flow: HamiltonianFlow, t: float, eta0: np.ndarray, max_iter: int = 60
) -> tuple[np.ndarray, float]:
    """Gauss-Newton on eta -> x(t, 0, eta) restricted to the unit sphere.

    Steps are taken in the tangent plane at the current iterate and retracted
    by normalization.  Returns the best iterate with its residual |x(t,0,eta)|;
    the caller decides whether that counts as converged.
    """
    eta = np.asarray(eta0, dtype=float)
    eta = eta / np.linalg.norm(eta)
    d = eta.size
    best_eta, best_res = eta, np.inf
    for _ in range(max_iter):
        F, J, _ = _x_residual(flow, t, eta)
        res = float(np.linalg.norm(F))
        if res < best_res:
            best_eta, best_res = eta, res
        if res <= 1e-14:
            break
        # restrict the Jacobian to the tangent plane of the sphere
        P = np.eye(d) - np.outer(eta, eta)
        G = J @ P
        step, *_ = np.linalg.lstsq(G, F, rcond=1e-10)
        step = P @ step
        if not np.isfinite(step).all():
            break
        nrm_step = float(np.linalg.norm(step))
        new = eta - step
        nrm = np.linalg.norm(new)
        if nrm < 1e-12:
            break
        eta = new / nrm
        if nrm_step < 1e-15:
            break
    return best_eta, best_res


def _angular_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.arccos(np.clip(np.dot(a, b), -1.0, 1.0)))


def excess(
    p: ClassicalSymbol,
    t: float,
    eta: np.ndarray,
    flow: HamiltonianFlow | None = None,
) -> int:
    """Excess e = d - rank of the eta-block of d x(t, 0, .) at a cone direction.

    The rank is cross-checked against the matching block of the backward flow
    Jacobian; singular values in the ambiguous relative band raise instead of
    guessing.
    """
    eta = np.asarray(eta, dtype=float)
    d = eta.size
    fl = flow or HamiltonianFlow(p)
    _, B, J = _x_residual(fl, t, eta)
    # Singular values are referenced to the Jacobian scale so that a block
    # vanishing to flow accuracy (full recurrence) yields rank 0 instead of
    # normalizing its own roundoff to size one.
    jnorm = float(np.linalg.norm(J, 2))

    def _rank(block: np.ndarray) -> int:
        sv = np.linalg.svd(block, compute_uv=False)
        rel = sv / jnorm
        in_band = (rel >= ILL_BAND[0]) & (rel <= ILL_BAND[1])
        if np.any(in_band):
            raise IllConditionedExcessError(
                f"ambiguous singular values {sv[in_band]} against scale {jnorm:.3e}"
            )
        return int(np.sum(rel > RANK_CUTOFF))

    rank = _rank(B)
    e = d - rank

    # backward flow: the d_xi y(0, xi) block of the inverse Jacobian has the
    # same rank as B for a clean configuration
    rank_b = _rank(np.linalg.inv(J)[:d, d:])
    if rank_b != rank:
        import warnings

        warnings.warn(
            f"clean-intersection check: forward rank {rank} != backward rank {rank_b}",
            stacklevel=2,
        )
    if not 1 <= e <= d:
        raise IllConditionedExcessError(f"excess {e} outside [1, {d}]")
    return e


def _kernel_tangent_basis(B: np.ndarray, eta: np.ndarray, e: int) -> np.ndarray:
    """Orthonormal basis of ker d_eta x(t,0,.) = T_eta Gamma_t, ordered radial first."""
    d = eta.size
    _, sv, Vt = np.linalg.svd(B)
    basis = Vt[d - e :]  # rows spanning the kernel
    # rotate so the radial direction is the first basis vector
    coeffs = basis @ eta
    radial = coeffs @ basis
    radial /= np.linalg.norm(radial)
    rows = [radial]
    for row in basis:
        v = row - sum(np.dot(row, r) * r for r in rows)
        if np.linalg.norm(v) > 1e-8:
            rows.append(v / np.linalg.norm(v))
    return np.array(rows[:e])


def gamma_scan(
    p: ClassicalSymbol,
    t: float,
    n_samples: int | None = None,
    tol: float = 1e-8,
    flow: HamiltonianFlow | None = None,
    seed: int = 0,
) -> RecurrenceCone:
    """Seed sphere directions, Gauss-Newton each one, keep deduplicated roots."""
    d = p.d
    if n_samples is None:
        n_samples = max(8 * d, 64 * (d - 1))
    if n_samples < 8 * d:
        raise ValueError("n_samples must be at least 8 d")
    report = validate(p, seed=seed)
    if not report.elliptic:
        raise ValueError("principal symbol is not elliptic")
    fl = flow or HamiltonianFlow(p)
    cone = RecurrenceCone(t=float(t), tol=float(tol))
    roots: list[tuple[np.ndarray, float]] = []
    for eta0 in _sphere_seeds(d, n_samples, seed):
        eta, res = refine_direction(fl, t, eta0)
        if res > tol:
            continue
        if any(_angular_distance(eta, r) < DEDUP_ANGLE for r, _ in roots):
            continue
        roots.append((eta, res))
    roots.sort(key=lambda r: tuple(r[0]))
    for eta, res in roots:
        fm = fl.at(t, np.concatenate([np.zeros(d), eta]))
        B = fm.jacobian[:d, d:]
        e = excess(p, t, eta, flow=fl)
        basis = _kernel_tangent_basis(B, eta, e)
        cone.directions.append(
            ConeDirection(eta=eta, xi=fm.value.xi, excess=e, tangent_basis=basis, residual=res)
        )
    return cone


def tangent_cone(
    cone: RecurrenceCone,
    eta: np.ndarray,
    flow_basis: np.ndarray | None = None,
) -> np.ndarray:
    """Orthonormal basis of T_eta Gamma_t from a local fit of converged neighbors.

    The radial direction eta is always included; further directions come from
    a principal-component fit of cone directions within angular radius 0.1.
    The dimension must match the stored excess, otherwise the standing
    clean-intersection assumption has failed numerically.
    """
    eta = np.asarray(eta, dtype=float)
    match = None
    for c in cone.directions:
        if _angular_distance(eta, c.eta) < DEDUP_ANGLE:
            match = c
            break
    if match is None:
        raise ValueError("eta is not stored in the cone")
    neighbors = [
        c.eta
        for c in cone.directions
        if 0 < _angular_distance(eta, c.eta) <= NEIGHBOR_RADIUS
    ]
    rows = [eta]
    if neighbors:
        P = np.eye(eta.size) - np.outer(eta, eta)
        residuals = np.array([P @ v for v in neighbors])
        _, sv, Vt = np.linalg.svd(residuals, full_matrices=False)
        for s, row in zip(sv, Vt):
            if s > 0.3 * sv[0] and s > 1e-6:
                rows.append(row)
    basis = np.array(rows)
    if basis.shape[0] != match.excess:
        raise CleanIntersectionError(
            f"tangent fit dimension {basis.shape[0]} != excess {match.excess} at eta={eta}"
        )
    return basis


def _min_sphere_residual(flow: HamiltonianFlow, t: float, seeds: np.ndarray) -> float:
    d = seeds.shape[1]
    best = np.inf
    for eta in seeds:
        x, _, _ = _x_residual(flow, t, eta)
        best = min(best, float(np.linalg.norm(x)))
    return best


def recurrence_times(
    p: ClassicalSymbol,
    t_range: tuple[float, float],
    resolution: float = 1e-2,
    tol: float = 1e-8,
    n_samples: int | None = None,
    seed: int = 0,
) -> list[tuple[float, RecurrenceCone]]:
    """Scan a time window for nonempty recurrence cones.

    A cheap sphere pre-filter flags candidate grid times; each candidate is
    refined by scalar minimization of the best Gauss-Newton residual, then
    summarized with a full scan.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    report = validate(p, seed=seed)
    if not report.elliptic:
        raise ValueError("principal symbol is not elliptic")
    d = p.d
    fl = HamiltonianFlow(p)
    seeds = _sphere_seeds(d, max(16, 8 * d), seed)
    t0, t1 = t_range
    ts = np.arange(t0, t1 + 0.5 * resolution, resolution)
    res = np.array([_min_sphere_residual(fl, t, seeds) for t in ts])
    floor = max(np.median(res) * 0.25, 10 * tol)
    results: list[tuple[float, RecurrenceCone]] = []
    i = 0
    while i < len(ts):
        if res[i] >= floor:
            i += 1
            continue
        j = i
        while j + 1 < len(ts) and res[j + 1] < floor:
            j += 1
        k = i + int(np.argmin(res[i : j + 1]))
        lo = ts[max(k - 1, 0)]
        hi = ts[min(k + 1, len(ts) - 1)]

        def g(t):
            return min(refine_direction(fl, t, eta, max_iter=25)[1] for eta in seeds)

        opt = minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        t_star = float(opt.x)
        # Bounded Brent cannot localize past sqrt(eps) * |t| in absolute
        # terms; polish in the shifted variable s = t - t_star so the
        # minimizer's relative tolerance no longer limits the precision.
        best = float(opt.fun)
        for width in (1e-4, 1e-9):
            center = t_star
            opt = minimize_scalar(
                lambda s: g(center + s),
                bounds=(-width, width),
                method="bounded",
                options={"xatol": 1e-6 * width},
            )
            if opt.fun < best:
                best, t_star = float(opt.fun), center + float(opt.x)
        # the trivial recurrence at t = 0 (identity flow) is not reported
        if g(t_star) <= tol and abs(t_star) > max(resolution, 1e-6):
            cone = gamma_scan(p, t_star, n_samples=n_samples, tol=tol, flow=fl, seed=seed)
            if not cone.empty:
                results.append((t_star, cone))
        i = j + 1
    return results
