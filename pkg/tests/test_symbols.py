"""Symbol container: homogeneity, gradients, validation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavefront_lab.symbols import (
    ClassicalSymbol,
    HomogeneousComponent,
    PhasePoint,
    eval_component,
    grad_component,
    hessian_component,
    homogeneity_residual,
    sphere_sample,
    validate,
)


def test_phase_point_round_trip():
    z = PhasePoint([1.0, 2.0], [3.0, 4.0])
    assert z.d == 2
    back = PhasePoint.from_z(z.z)
    assert np.allclose(back.x, z.x) and np.allclose(back.xi, z.xi)


def test_phase_point_rejects_non_finite():
    with pytest.raises(ValueError):
        PhasePoint([np.nan], [0.0])


def test_monomial_degree_mismatch_rejected():
    with pytest.raises(ValueError):
        HomogeneousComponent(2, monomials={(1, 0): 1.0})


def test_oscillator_component_values():
    c = HomogeneousComponent.oscillator([1.0, 2.0])
    z = np.array([1.0, 1.0, 1.0, 1.0])
    # 1/2 (1 + 4) x^2-part + 1/2 (1 + 1) xi-part
    assert eval_component(c, z) == pytest.approx(0.5 * (1 + 4) + 0.5 * 2)


def test_quadratic_matrix_reproduces_values():
    c = HomogeneousComponent.oscillator([1.0, 3.0])
    A = c.quadratic_matrix()
    rng = np.random.default_rng(1)
    for z in rng.standard_normal((20, 4)):
        assert eval_component(c, z) == pytest.approx(0.5 * z @ A @ z, rel=1e-12)


def test_linear_coefficients_round_trip():
    c = np.array([0.5, -1.0])
    b = np.array([2.0, 0.0])
    comp = HomogeneousComponent.linear(c, b)
    c2, b2 = comp.linear_coefficients()
    assert np.allclose(c2, c) and np.allclose(b2, b)


def test_polynomial_homogeneity_residual_tiny():
    pts = sphere_sample(2, 50, seed=3)
    for comp in (
        HomogeneousComponent.oscillator([1.0, 2.0]),
        HomogeneousComponent.linear([1.0, 0.0], [0.0, -2.0]),
    ):
        assert homogeneity_residual(comp, pts) <= 1e-10


def test_expression_degree_is_checked_not_inferred():
    # |z|^2 declared as degree 1 must fail validation
    bad = HomogeneousComponent(1, expression=lambda z: float(z @ z), dimension=1)
    p = ClassicalSymbol([HomogeneousComponent.oscillator([1.0]), bad], 1)
    report = validate(p)
    assert not report.ok
    assert any("homogeneity" in f for f in report.failures)


def test_validate_oscillator_elliptic():
    report = validate(ClassicalSymbol.oscillator([1.0, 2.0]))
    assert report.ok and report.elliptic and report.p2_real
    assert report.ellipticity_min > 0
    assert all(r <= 1e-10 for r in report.homogeneity_residuals.values())


def test_validate_flags_non_elliptic():
    # p2 = x.xi vanishes on sphere points with x=0 or xi=0 and changes sign
    comp = HomogeneousComponent(2, monomials={(1, 1): 1.0}, dimension=1)
    report = validate(ClassicalSymbol([comp], 1))
    # not positive on the whole sphere sample; min |p2| is tiny
    assert report.ellipticity_min < 0.5


def test_grad_matches_finite_differences():
    rng = np.random.default_rng(7)
    comps = [
        HomogeneousComponent.oscillator([1.0, 2.0]),
        HomogeneousComponent(
            2, expression=lambda z: float(z @ z) + 0.5 * float(z[0] * z[2]), dimension=2
        ),
    ]
    for comp in comps:
        for _ in range(10):
            z = rng.standard_normal(4)
            z *= rng.uniform(0.5, 10.0) / np.linalg.norm(z)
            g = grad_component(comp, z)
            h = 1e-6 * max(1.0, np.linalg.norm(z))
            fd = np.zeros(4)
            for j in range(4):
                e = np.zeros(4)
                e[j] = h
                fd[j] = (eval_component(comp, z + e) - eval_component(comp, z - e)) / (2 * h)
            assert np.linalg.norm(g - fd) <= 1e-4 * max(1.0, np.linalg.norm(fd))


def test_hessian_of_quadratic_is_constant_matrix():
    comp = HomogeneousComponent.oscillator([1.0, 2.0])
    A = comp.quadratic_matrix()
    rng = np.random.default_rng(11)
    for z in rng.standard_normal((5, 4)):
        assert np.allclose(hessian_component(comp, z), A)


def test_symbol_requires_principal_part():
    with pytest.raises(ValueError):
        ClassicalSymbol([HomogeneousComponent.linear([1.0], [0.0])], 1)


def test_symbol_orders_components():
    with pytest.raises(ValueError):
        ClassicalSymbol(
            [
                HomogeneousComponent.linear([1.0], [0.0]),
                HomogeneousComponent.oscillator([1.0]),
            ],
            1,
        )


@settings(max_examples=30, deadline=None)
@given(
    lam=st.floats(min_value=0.1, max_value=10.0),
    zx=st.floats(min_value=-3, max_value=3),
    zxi=st.floats(min_value=-3, max_value=3),
)
def test_degree2_scaling_property(lam, zx, zxi):
    comp = HomogeneousComponent.oscillator([1.5])
    z = np.array([zx, zxi])
    assert eval_component(comp, lam * z) == pytest.approx(
        lam**2 * eval_component(comp, z), rel=1e-12, abs=1e-12
    )


def test_sphere_sample_deterministic_and_unit():
    a = sphere_sample(2, seed=5)
    b = sphere_sample(2, seed=5)
    assert np.array_equal(a, b)
    assert np.allclose(np.linalg.norm(a, axis=1), 1.0)
    assert a.shape == (64 * 4, 4)
