"""Transformation maps on sampled wavefront sets.

Implements free propagation through the recurrence cone, the reduced
subprincipal shift, their composition for the full evolution, and transport
of phase-space (isotropic) directions along the flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from wavefront_lab.errors import (
    CompositionError,
    DegenerateRecurrenceError,
    NumericalConsistencyError,
)
from wavefront_lab.flow import HamiltonianFlow, xt_gradient_xi
from wavefront_lab.recurrence import RecurrenceCone, _kernel_tangent_basis, refine_direction
from wavefront_lab.symbols import ClassicalSymbol

BASE_DEDUP = 1e-8
ANGLE_DEDUP = 1e-8
UNIT_TOL = 1e-12


def _unit(v: np.ndarray) -> np.ndarray:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("zero direction")
    return v / n


@dataclass(frozen=True)
class Ray:
    """A wavefront element: base point and unit codirection."""

    base: np.ndarray
    dir: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "base", np.atleast_1d(np.asarray(self.base, dtype=float)))
        object.__setattr__(self, "dir", np.atleast_1d(np.asarray(self.dir, dtype=float)))
        if abs(np.linalg.norm(self.dir) - 1.0) > 1e-6:
            object.__setattr__(self, "dir", _unit(self.dir))
        assert abs(np.linalg.norm(self.dir) - 1.0) <= UNIT_TOL * 10

    def to_json(self) -> dict:
        return {"base": self.base.tolist(), "dir": self.dir.tolist(), "weight": self.weight}

    @staticmethod
    def from_json(obj: dict) -> "Ray":
        return Ray(np.array(obj["base"]), np.array(obj["dir"]), obj.get("weight", 1.0))


@dataclass(frozen=True)
class IsoRay:
    """A phase-space direction in S^{2d-1} obstructing Schwartz decay."""

    dir: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dir", _unit(self.dir))


class WavefrontSet:
    """Finite sampled wavefront set with a compact-support flag.

    ``bound`` records the logical strength of the set: "exact" for declared
    inputs and reduced-shift outputs, "upper" / "inner" for the inclusion
    bounds of the free and full propagation.
    """

    def __init__(self, rays=(), compact_support: bool = True, bound: str = "exact"):
        self.compact_support = bool(compact_support)
        self.bound = bound
        self.rays: list[Ray] = []
        for r in rays:
            self.add(r)

    def add(self, ray: Ray) -> bool:
        for r in self.rays:
            if (
                np.linalg.norm(r.base - ray.base) <= BASE_DEDUP
                and _angle(r.dir, ray.dir) <= ANGLE_DEDUP
            ):
                return False
        self.rays.append(ray)
        return True

    def sorted(self) -> list[Ray]:
        return sorted(self.rays, key=lambda r: (tuple(r.base), tuple(r.dir)))

    def __len__(self) -> int:
        return len(self.rays)

    def __iter__(self):
        return iter(self.sorted())

    def to_json(self) -> dict:
        return {
            "compact_support": self.compact_support,
            "bound": self.bound,
            "rays": [r.to_json() for r in self.sorted()],
        }

    @staticmethod
    def from_json(obj: dict) -> "WavefrontSet":
        return WavefrontSet(
            [Ray.from_json(r) for r in obj.get("rays", [])],
            compact_support=obj.get("compact_support", True),
            bound=obj.get("bound", "exact"),
        )


def _angle(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.arccos(np.clip(np.dot(a, b), -1.0, 1.0)))


@dataclass
class PredictConfig:
    """Knobs for cone matching and affine-family sampling."""

    angle_match_tol: float = 1e-4
    family_density: int = 33
    family_box: float = 3.0
    cone_tol: float = 1e-8
    # "pointwise": orthogonality against T_eta Gamma_t at the matched eta;
    # "whole_cone": against the span of all sampled tangent spaces.
    orthogonality: str = "pointwise"


@dataclass
class _MatchData:
    eta: np.ndarray
    xi: np.ndarray
    excess: int
    dxi_deta: np.ndarray       # B = d_eta xi(t, 0, eta)
    tangent: np.ndarray        # rows spanning T_eta Gamma_t


def _match_ray_to_cone(
    flow: HamiltonianFlow,
    t: float,
    cone: RecurrenceCone,
    direction: np.ndarray,
    cfg: PredictConfig,
) -> _MatchData | None:
    """Match an input codirection to the recurrence cone.

    Stored cone directions are tried first; otherwise a Gauss-Newton
    refinement seeded at the input direction decides membership (the cone is
    a sampled object and may not contain the exact input direction even when
    the whole sphere recurs).
    """
    d = direction.size
    eta = None
    for c in cone.directions:
        if _angle(c.eta, direction) <= cfg.angle_match_tol:
            eta = c.eta
            break
    if eta is None:
        cand, res = refine_direction(flow, t, direction)
        if res <= cone.tol and _angle(cand, direction) <= cfg.angle_match_tol:
            eta = cand
    if eta is None:
        return None
    fm = flow.at(t, np.concatenate([np.zeros(d), eta]))
    J = fm.jacobian
    Bx = J[:d, d:]                # d_eta x block
    B = J[d:, d:]                 # d_eta xi block
    # cross-validate the Jacobian block against finite differences of the
    # return map, mirroring the dual-route contract of the flow integrals
    h = 1e-5
    B_fd = np.empty((d, d))
    for j in range(d):
        ej = np.zeros(d)
        ej[j] = h
        zp = flow.at(t, np.concatenate([np.zeros(d), eta + ej])).value.xi
        zm = flow.at(t, np.concatenate([np.zeros(d), eta - ej])).value.xi
        B_fd[:, j] = (zp - zm) / (2 * h)
    scale = max(np.linalg.norm(B), 1.0)
    if np.linalg.norm(B - B_fd) > 1e-4 * scale:
        raise NumericalConsistencyError("d_eta xi block disagrees with finite differences")

    from wavefront_lab.recurrence import excess as excess_fn

    e = excess_fn(flow.p, t, eta, flow=flow)
    if cfg.orthogonality == "whole_cone" and len(cone.directions) > 0:
        stacked = np.vstack([c.tangent_basis for c in cone.directions])
        q, r = np.linalg.qr(stacked.T)
        keep = np.abs(np.diag(r)) > 1e-8
        tangent = q.T[keep]
    else:
        tangent = _kernel_tangent_basis(Bx, eta, e)
    return _MatchData(eta=eta, xi=fm.value.xi, excess=e, dxi_deta=B, tangent=tangent)


def _solve_base_points(
    y: np.ndarray, match: _MatchData, cfg: PredictConfig, shift: np.ndarray | None = None
) -> list[np.ndarray]:
    """Solve T (y + shift - B^T x) = 0 for base points x.

    Full recurrence gives a unique solution; otherwise the affine solution
    family is sampled at the configured density inside the base-point box.
    """
    d = y.size
    rhs_vec = y if shift is None else y + shift
    Bt = match.dxi_deta.T
    T = match.tangent
    if match.excess == d:
        try:
            x = np.linalg.solve(Bt, rhs_vec)
        except np.linalg.LinAlgError as exc:
            raise DegenerateRecurrenceError(str(exc)) from exc
        if not np.isfinite(x).all():
            raise DegenerateRecurrenceError("singular linear system at full recurrence")
        return [x]
    A = T @ Bt
    b = T @ rhs_vec
    xp, *_ = np.linalg.lstsq(A, b, rcond=None)
    _, sv, Vt = np.linalg.svd(A)
    rank = int(np.sum(sv > 1e-10 * max(sv[0], 1e-30)))
    null = Vt[rank:]
    if null.shape[0] == 0:
        return [xp]
    grids = np.meshgrid(
        *[np.linspace(-cfg.family_box, cfg.family_box, cfg.family_density)] * null.shape[0],
        indexing="ij",
    )
    coeffs = np.stack([g.ravel() for g in grids], axis=1)
    return [xp + c @ null for c in coeffs]


def propagate_free(
    wf: WavefrontSet,
    t: float,
    p: ClassicalSymbol,
    cone: RecurrenceCone,
    cfg: PredictConfig | None = None,
    flow: HamiltonianFlow | None = None,
) -> WavefrontSet:
    """Free evolution of a sampled wavefront set through the recurrence cone.

    For compactly supported inputs the result is an upper bound for the exact
    wavefront set; otherwise only an inner bound (no spurious directions are
    predicted, but singularities outside the recurrent directions may exist).
    """
    cfg = cfg or PredictConfig()
    fl = flow or HamiltonianFlow(p)
    out = WavefrontSet(
        compact_support=wf.compact_support,
        bound="upper" if wf.compact_support else "inner",
    )
    for ray in wf:
        match = _match_ray_to_cone(fl, t, cone, ray.dir, cfg)
        if match is None:
            continue
        new_dir = _unit(match.xi)
        for x in _solve_base_points(ray.base, match, cfg):
            out.add(Ray(base=x, dir=new_dir, weight=ray.weight))
    return out


def reduced_shift(p: ClassicalSymbol, t: float, xi: np.ndarray, flow=None) -> np.ndarray:
    """Base-point displacement d_xi X_t p1(0, xi) of the reduced propagator."""
    return xt_gradient_xi(p.p1, p, t, xi, flow=flow)


def propagate_reduced(
    wf: WavefrontSet, t: float, p: ClassicalSymbol, flow: HamiltonianFlow | None = None
) -> WavefrontSet:
    """Exact ray-wise map (x, xi) -> (x + d_xi X_t p1(0, xi), xi)."""
    fl = flow or HamiltonianFlow(p)
    out = WavefrontSet(compact_support=wf.compact_support, bound=wf.bound)
    for ray in wf:
        shift = reduced_shift(p, t, ray.dir, flow=fl)
        out.add(replace(ray, base=ray.base + shift))
    return out


def propagate_full(
    wf: WavefrontSet,
    t: float,
    p: ClassicalSymbol,
    cone: RecurrenceCone,
    cfg: PredictConfig | None = None,
    flow: HamiltonianFlow | None = None,
    consistency_tol: float = 1e-6,
) -> WavefrontSet:
    """Full evolution: displaced orthogonality condition of the composed propagator.

    Computed from the direct formula (shift evaluated at the matched cone
    direction) and cross-checked against the shift-then-free composition;
    disagreement on base points raises a composition error.
    """
    if not wf.compact_support:
        raise ValueError("full evolution requires compactly supported input")
    cfg = cfg or PredictConfig()
    fl = flow or HamiltonianFlow(p)
    p1_zero = p.p1.is_polynomial and not p.p1.monomials
    if p1_zero:
        return propagate_free(wf, t, p, cone, cfg, flow=fl)

    direct = WavefrontSet(compact_support=True, bound="upper")
    for ray in wf:
        match = _match_ray_to_cone(fl, t, cone, ray.dir, cfg)
        if match is None:
            continue
        shift = reduced_shift(p, t, match.eta, flow=fl)
        new_dir = _unit(match.xi)
        for x in _solve_base_points(ray.base, match, cfg, shift=shift):
            direct.add(Ray(base=x, dir=new_dir, weight=ray.weight))

    composed = propagate_free(propagate_reduced(wf, t, p, flow=fl), t, p, cone, cfg, flow=fl)
    _check_composition(direct, composed, consistency_tol)
    return direct


def _check_composition(a: WavefrontSet, b: WavefrontSet, tol: float) -> None:
    if len(a) != len(b):
        raise CompositionError(f"composition mismatch: {len(a)} vs {len(b)} rays")
    for ra, rb in zip(a.sorted(), b.sorted()):
        if np.linalg.norm(ra.base - rb.base) > tol or _angle(ra.dir, rb.dir) > tol:
            raise CompositionError(
                f"composition mismatch: {ra.base} vs {rb.base} (dirs {ra.dir} vs {rb.dir})"
            )


def propagate_iso(
    wf_iso: list[IsoRay], t: float, p: ClassicalSymbol, flow: HamiltonianFlow | None = None
) -> list[IsoRay]:
    """Transport phase-space directions along the flow of the principal symbol.

    Well-defined on directions because degree-2 Hamiltonian flows commute
    with positive scaling.
    """
    fl = flow or HamiltonianFlow(p)
    out = []
    for ray in wf_iso:
        z = fl.at(t, ray.dir).value.z
        out.append(IsoRay(_unit(z)))
    return out
