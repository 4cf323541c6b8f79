"""Classical isotropic symbols as sums of homogeneous components.

A symbol is stored as components of homogeneity degree 2, 1 and optionally 0
over phase space R^{2d}.  Components are either polynomial (a coefficient
table over monomials in (x, xi)) or a closed-form expression with a declared
homogeneity degree that is checked, never inferred.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from wavefront_lab.errors import EvaluationDomainError

# Relative tolerance for the homogeneity check of expression components.
HOMOGENEITY_RTOL = 1e-10
# Scales at which homogeneity is probed.
HOMOGENEITY_SCALES = (2.0, 5.0, 10.0)
# Finite-difference step factor for expression gradients.
FD_STEP = 1e-6


@dataclass(frozen=True)
class PhasePoint:
    """A point (x, xi) in phase space R^d x R^d."""

    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "xi", np.atleast_1d(np.asarray(self.xi, dtype=float)))
        if self.x.shape != self.xi.shape or self.x.ndim != 1:
            raise ValueError("x and xi must be 1-d arrays of equal length")
        if not (np.isfinite(self.x).all() and np.isfinite(self.xi).all()):
            raise ValueError("phase point has non-finite entries")

    @property
    def d(self) -> int:
        return self.x.size

    @property
    def z(self) -> np.ndarray:
        """Concatenated coordinates (x, xi) of length 2d."""
        return np.concatenate([self.x, self.xi])

    @staticmethod
    def from_z(z: np.ndarray) -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        d = z.size // 2
        return PhasePoint(z[:d], z[d:])


def _as_z(z) -> np.ndarray:
    if isinstance(z, PhasePoint):
        return z.z
    return np.asarray(z, dtype=float)


class HomogeneousComponent:
    """One homogeneous term of a classical symbol.

    Polynomial form stores ``monomials`` as a dict mapping exponent tuples of
    length 2d (x-exponents then xi-exponents) to real coefficients.
    Expression form stores a callable of the 2d-vector z, with the degree
    declared by the caller.
    """

    def __init__(
        self,
        degree: int,
        *,
        monomials: dict[tuple[int, ...], float] | None = None,
        expression: Callable[[np.ndarray], float] | None = None,
        dimension: int | None = None,
    ):
        if (monomials is None) == (expression is None):
            raise ValueError("provide exactly one of monomials or expression")
        if degree not in (0, 1, 2):
            raise ValueError("degree must be 0, 1 or 2")
        self.degree = int(degree)
        self.expression = expression
        if monomials is not None:
            monomials = {tuple(int(e) for e in k): float(v) for k, v in monomials.items()}
            sizes = {len(k) for k in monomials}
            if len(sizes) > 1:
                raise ValueError("inconsistent exponent tuple lengths")
            if monomials:
                (n2d,) = sizes
                if n2d % 2 != 0:
                    raise ValueError("exponent tuples must have even length 2d")
                if dimension is None:
                    dimension = n2d // 2
                elif dimension != n2d // 2:
                    raise ValueError("dimension disagrees with exponent tuples")
            for expo in monomials:
                if sum(expo) != degree:
                    raise ValueError(f"monomial {expo} is not homogeneous of degree {degree}")
        if dimension is None:
            raise ValueError("dimension required for expression components")
        self.monomials = monomials
        self.d = int(dimension)

    @property
    def is_polynomial(self) -> bool:
        return self.monomials is not None

    @staticmethod
    def zero(degree: int, d: int) -> "HomogeneousComponent":
        return HomogeneousComponent(degree, monomials={}, dimension=d)

    @staticmethod
    def linear(c: np.ndarray, b: np.ndarray) -> "HomogeneousComponent":
        """Degree-1 polynomial c.x + b.xi."""
        c = np.atleast_1d(np.asarray(c, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        d = c.size
        mono: dict[tuple[int, ...], float] = {}
        for j in range(d):
            if c[j] != 0.0:
                e = [0] * (2 * d)
                e[j] = 1
                mono[tuple(e)] = c[j]
            if b[j] != 0.0:
                e = [0] * (2 * d)
                e[d + j] = 1
                mono[tuple(e)] = b[j]
        return HomogeneousComponent(1, monomials=mono, dimension=d)

    @staticmethod
    def oscillator(omegas) -> "HomogeneousComponent":
        """p2 = 1/2 (|xi|^2 + sum_j omega_j^2 x_j^2)."""
        omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
        d = omegas.size
        mono: dict[tuple[int, ...], float] = {}
        for j in range(d):
            ex = [0] * (2 * d)
            ex[j] = 2
            mono[tuple(ex)] = 0.5 * omegas[j] ** 2
            ek = [0] * (2 * d)
            ek[d + j] = 2
            mono[tuple(ek)] = 0.5
        return HomogeneousComponent(2, monomials=mono, dimension=d)

    def __call__(self, z) -> float:
        return eval_component(self, z)

    def linear_coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (c, b) for a degree-1 polynomial component c.x + b.xi."""
        if not (self.is_polynomial and self.degree == 1):
            raise ValueError("linear coefficients only defined for degree-1 polynomials")
        c = np.zeros(self.d)
        b = np.zeros(self.d)
        for expo, coef in self.monomials.items():
            j = next(i for i, e in enumerate(expo) if e == 1)
            if j < self.d:
                c[j] = coef
            else:
                b[j - self.d] = coef
        return c, b

    def quadratic_matrix(self) -> np.ndarray:
        """Return the symmetric A with p(z) = 1/2 z^T A z for a degree-2 polynomial."""
        if not (self.is_polynomial and self.degree == 2):
            raise ValueError("quadratic matrix only defined for degree-2 polynomials")
        n = 2 * self.d
        A = np.zeros((n, n))
        for expo, coef in self.monomials.items():
            idx = [i for i, e in enumerate(expo) for _ in range(e)]
            i, j = idx
            if i == j:
                A[i, i] += 2.0 * coef
            else:
                A[i, j] += coef
                A[j, i] += coef
        return A


def eval_component(c: HomogeneousComponent, z) -> float:
    """Evaluate a homogeneous component at a phase-space point."""
    zz = _as_z(z)
    if c.is_polynomial:
        val = 0.0
        for expo, coef in c.monomials.items():
            val += coef * np.prod(zz ** np.asarray(expo))
        return float(val)
    val = float(c.expression(zz))
    if not np.isfinite(val):
        raise EvaluationDomainError(f"component evaluation non-finite at z={zz}")
    return val


def grad_component(c: HomogeneousComponent, z) -> np.ndarray:
    """Gradient in (x, xi); analytic for polynomials, central differences otherwise."""
    zz = _as_z(z)
    n = zz.size
    if c.is_polynomial:
        g = np.zeros(n)
        for expo, coef in c.monomials.items():
            for j, e in enumerate(expo):
                if e == 0:
                    continue
                rest = list(expo)
                rest[j] -= 1
                g[j] += coef * e * np.prod(zz ** np.asarray(rest))
        return g
    h = FD_STEP * max(1.0, float(np.linalg.norm(zz)))
    g = np.zeros(n)
    for j in range(n):
        ej = np.zeros(n)
        ej[j] = h
        g[j] = (eval_component(c, zz + ej) - eval_component(c, zz - ej)) / (2 * h)
    return g


def hessian_component(c: HomogeneousComponent, z) -> np.ndarray:
    """Hessian in (x, xi); analytic for polynomials, differences of gradients otherwise."""
    zz = _as_z(z)
    n = zz.size
    if c.is_polynomial:
        H = np.zeros((n, n))
        for expo, coef in c.monomials.items():
            for j, ej in enumerate(expo):
                if ej == 0:
                    continue
                for k, ek in enumerate(expo):
                    mult = ej * (ek if k != j else ej - 1)
                    if mult == 0:
                        continue
                    rest = list(expo)
                    rest[j] -= 1
                    rest[k] -= 1
                    H[j, k] += coef * mult * np.prod(zz ** np.asarray(rest))
        return H
    h = 1e-5 * max(1.0, float(np.linalg.norm(zz)))
    H = np.zeros((n, n))
    for j in range(n):
        ej = np.zeros(n)
        ej[j] = h
        H[:, j] = (grad_component(c, zz + ej) - grad_component(c, zz - ej)) / (2 * h)
    return 0.5 * (H + H.T)


def sphere_sample(d: int, n_points: int | None = None, seed: int = 0) -> np.ndarray:
    """Deterministic quasi-uniform sample of the unit sphere S^{2d-1}.

    Defaults to 64 d^2 points drawn from a seeded Gaussian and normalized.
    """
    if n_points is None:
        n_points = 64 * d * d
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n_points, 2 * d))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts


@dataclass
class ValidationReport:
    """Homogeneity and ellipticity diagnostics of a classical symbol."""

    homogeneity_residuals: dict[int, float]
    ellipticity_min: float
    elliptic: bool
    p2_real: bool
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


class ClassicalSymbol:
    """p ~ p2 + p1 + p0, the classical Hamiltonian data.

    The degree-0 tail is optional; nothing below degree 1 enters the
    propagation theory, so lower components are deliberately not supported.
    """

    def __init__(self, components: list[HomogeneousComponent], d: int):
        degrees = [c.degree for c in components]
        if sorted(degrees, reverse=True) != degrees or len(set(degrees)) != len(degrees):
            raise ValueError("components must have strictly decreasing degrees")
        if 2 not in degrees:
            raise ValueError("a degree-2 principal component is required")
        for c in components:
            if c.d != d:
                raise ValueError("component dimension mismatch")
        self.components = list(components)
        self.d = int(d)

    @property
    def p2(self) -> HomogeneousComponent:
        return next(c for c in self.components if c.degree == 2)

    @property
    def p1(self) -> HomogeneousComponent:
        for c in self.components:
            if c.degree == 1:
                return c
        return HomogeneousComponent.zero(1, self.d)

    def __call__(self, z) -> float:
        return sum(eval_component(c, z) for c in self.components)

    @staticmethod
    def oscillator(omegas, p1: HomogeneousComponent | None = None) -> "ClassicalSymbol":
        p2 = HomogeneousComponent.oscillator(omegas)
        comps = [p2] + ([p1] if p1 is not None else [])
        return ClassicalSymbol(comps, p2.d)


def homogeneity_residual(c: HomogeneousComponent, points: np.ndarray) -> float:
    """Max relative deviation from |f(lam z) - lam^deg f(z)| over sample points."""
    worst = 0.0
    for z in points:
        fz = eval_component(c, z)
        for lam in HOMOGENEITY_SCALES:
            flz = eval_component(c, lam * z)
            denom = lam ** c.degree * (1.0 + abs(fz))
            worst = max(worst, abs(flz - lam ** c.degree * fz) / denom)
    return worst


def validate(p: ClassicalSymbol, seed: int = 0, n_points: int | None = None) -> ValidationReport:
    """Check homogeneity of every component and ellipticity of p2 on the sphere."""
    pts = sphere_sample(p.d, n_points, seed=seed)
    residuals = {}
    failures = []
    for c in p.components:
        res = homogeneity_residual(c, pts[: min(len(pts), 100)])
        residuals[c.degree] = res
        if res > HOMOGENEITY_RTOL:
            failures.append(f"degree-{c.degree} component fails homogeneity ({res:.2e})")
    vals = np.array([eval_component(p.p2, z) for z in pts])
    p2_real = bool(np.isrealobj(vals) and np.isfinite(vals).all())
    emin = float(np.min(np.abs(vals)))
    elliptic = emin > 0.0
    if not elliptic:
        failures.append("p2 vanishes on the sphere sample (not elliptic)")
    if not p2_real:
        failures.append("p2 is not real-valued on the sphere sample")
    return ValidationReport(residuals, emin, elliptic, p2_real, failures)
