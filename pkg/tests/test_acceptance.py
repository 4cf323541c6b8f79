"""Acceptance criteria A1-A10.

Each test prints one PASS/FAIL line with the measured numbers; the assertions
enforce the stated tolerances.
"""

import time

import numpy as np
import pytest

from wavefront_lab.detector import detect_wf, detect_wf_iso, singularity_score
from wavefront_lab.flow import (
    HamiltonianFlow,
    QuadraticForm,
    flow_exact,
    flow_numeric,
    recorded_sign_convention,
    symplectic_defect,
)
from wavefront_lab.harness import ScenarioConfig
from wavefront_lab.quantum import (
    GridState,
    QuadraticHamiltonianSpec,
    affine_propagate,
    apply_recurrence_identity,
    egorov_check,
    hermite_function,
    make_gaussian,
    make_truncated_jump,
    mehler_propagate,
    reflect,
)
from wavefront_lab.recurrence import gamma_scan, recurrence_times
from wavefront_lab.statphase import (
    critical_point_orders,
    cubic_problem,
    default_suite,
    eval_I,
    gaussian_oracle,
    gaussian_problem,
    verify_boundedness,
)
from wavefront_lab.symbols import ClassicalSymbol, HomogeneousComponent
from wavefront_lab.wfpredict import (
    Ray,
    WavefrontSet,
    propagate_free,
    propagate_full,
    propagate_reduced,
)

from conftest import grid_axis, state_1d

N = 2048
L = 12.0
DX = 2 * L / N
TWO_CELLS = 2 * DX

SCENARIO_DIR = None


def _report(tag: str, ok: bool, details: str) -> None:
    print(f"{tag}: {'PASS' if ok else 'FAIL'} ({details})")
    assert ok, f"{tag} failed: {details}"


def _l2(a: np.ndarray, b: np.ndarray, dx: float, d: int = 1) -> float:
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2) * dx**d))


def test_A1_flow_fidelity():
    start = time.time()
    rng = np.random.default_rng(0)
    worst_err = 0.0
    worst_defect = 0.0
    for omegas in ([1.0], [1.0, 2.0]):
        d = len(omegas)
        Q = QuadraticForm.from_omegas(omegas)
        p = ClassicalSymbol.oscillator(omegas)
        pts = rng.standard_normal((100, 2 * d))
        pts *= (rng.uniform(0.5, 5.0, 100) / np.linalg.norm(pts, axis=1))[:, None]
        times = np.linspace(0.0, 2 * np.pi, 9)[1:]
        for z0 in pts[:: (4 if d == 2 else 2)]:
            for t in times:
                num = flow_numeric(p, t, z0, step=1e-4, richardson=False)
                exa = flow_exact(Q, t, z0)
                worst_err = max(worst_err, float(np.linalg.norm(num.value.z - exa.value.z)))
                worst_defect = max(
                    worst_defect,
                    symplectic_defect(num.jacobian),
                    symplectic_defect(exa.jacobian),
                )
    elapsed = time.time() - start
    ok = worst_err <= 1e-6 and worst_defect <= 1e-8 and elapsed < 10
    _report("A1 flow fidelity", ok, f"max_err={worst_err:.2e} defect={worst_defect:.2e} {elapsed:.1f}s")


def test_A2_sign_convention_oracle():
    omegas = np.array([1.0, 2.0])
    z0 = np.array([1.0, 0.5, 0.3, -0.2])
    t = 1.0
    d = 2
    A = np.diag(np.concatenate([omegas**2, np.ones(d)]))
    O = np.zeros((4, 4))
    O[:d, d:] = np.eye(d)
    O[d:, :d] = -np.eye(d)
    M = O @ A

    h = 1e-5
    nsteps = int(round(t / h))
    z = z0.copy()
    for _ in range(nsteps):
        k1 = M @ z
        k2 = M @ (z + 0.5 * h * k1)
        k3 = M @ (z + 0.5 * h * k2)
        k4 = M @ (z + h * k3)
        z = z + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)

    exact = flow_exact(QuadraticForm.from_omegas(omegas), t, z0).value.z
    minus_sign = np.concatenate(
        [
            np.cos(omegas * t) * z0[:d] + np.sin(omegas * t) / omegas * z0[d:],
            np.cos(omegas * t) * z0[d:] - omegas * np.sin(omegas * t) * z0[:d],
        ]
    )
    plus_sign = np.concatenate(
        [
            np.cos(omegas * t) * z0[:d] + np.sin(omegas * t) / omegas * z0[d:],
            np.cos(omegas * t) * z0[d:] + omegas * np.sin(omegas * t) * z0[:d],
        ]
    )
    err_exact = float(np.linalg.norm(exact - z))
    err_minus = float(np.linalg.norm(minus_sign - z))
    err_plus = float(np.linalg.norm(plus_sign - z))
    ok = err_exact <= 1e-8 and err_minus <= 1e-8 and err_plus > 1e-2
    _report(
        "A2 sign convention",
        ok,
        f"|exact-RK|={err_exact:.1e} -sin variant {err_minus:.1e}, "
        f"+sin variant {err_plus:.1e}; resolution: {recorded_sign_convention}",
    )


def test_A3_recurrence_geometry():
    start = time.time()
    iso = ClassicalSymbol.oscillator([1.0])
    found = recurrence_times(iso, (0.1, 10.0), resolution=0.01, tol=1e-8)
    times = np.array([t for t, _ in found])
    ok = np.allclose(times, [np.pi, 2 * np.pi, 3 * np.pi], atol=1e-6)
    for k, (t, cone) in enumerate(found, start=1):
        for c in cone.directions:
            ok &= np.linalg.norm(c.xi - (-1.0) ** k * c.eta) <= 1e-6
            ok &= c.excess == 1  # e = d for d = 1

    aniso = ClassicalSymbol.oscillator([1.0, 2.0])
    found2 = recurrence_times(aniso, (0.1, 6.3), resolution=0.01, tol=1e-8)
    times2 = np.array([t for t, _ in found2])
    ok &= np.allclose(times2, [np.pi / 2, np.pi, 3 * np.pi / 2, 2 * np.pi], atol=1e-6)
    excesses = [sorted({c.excess for c in cone.directions}) for _, cone in found2]
    ok &= excesses == [[1], [2], [1], [2]]
    elapsed = time.time() - start
    ok &= elapsed < 30
    _report(
        "A3 recurrence geometry",
        bool(ok),
        f"omega=1 times={np.round(times, 6).tolist()}, "
        f"omega=(1,2) times={np.round(times2, 6).tolist()} e={excesses} {elapsed:.1f}s",
    )


def test_A4_free_evolution_smoothing():
    start = time.time()
    spec = QuadraticHamiltonianSpec(omegas=[1.0])
    state0 = state_1d(make_truncated_jump(grid_axis(), x0=1.0))
    rays0 = detect_wf(state0).rays.sorted()
    ok = len(rays0) >= 1 and all(abs(r.base[0] - 1.0) <= TWO_CELLS for r in rays0)

    half = mehler_propagate(state0, np.pi, spec)
    rays_pi = detect_wf(half).rays.sorted()
    ok &= len(rays_pi) >= 1
    ok &= all(abs(r.base[0] + 1.0) <= TWO_CELLS for r in rays_pi)

    score0 = singularity_score(state0)
    ratios = []
    for t in (np.pi / 4, np.pi / 2, 1.0):
        out = mehler_propagate(state0, t, spec)
        ratios.append(score0 / singularity_score(out))
        ok &= ratios[-1] >= 1e3
        ok &= len(detect_wf(out).rays) == 0
    elapsed = time.time() - start
    ok &= elapsed < 120
    _report(
        "A4 smoothing",
        bool(ok),
        f"t=0 rays at {[round(float(r.base[0]), 4) for r in rays0]}, "
        f"t=pi at {[round(float(r.base[0]), 4) for r in rays_pi]}, "
        f"score drops {[f'{r:.1e}' for r in ratios]} {elapsed:.0f}s",
    )


def test_A5_operator_identities():
    spec = QuadraticHamiltonianSpec(omegas=[1.0])
    x = grid_axis()
    states = {
        "hermite0": hermite_function(0, x),
        "hermite1": hermite_function(1, x),
        "hermite2": hermite_function(2, x),
        "gaussian": make_gaussian(x, x0=1.5, sigma=1.0),
        "jump": make_truncated_jump(x, x0=1.0),
    }
    dft = np.exp(-1j * np.outer(x, x)) * DX / np.sqrt(2 * np.pi)
    worst_r = worst_f = 0.0
    for values in states.values():
        st0 = state_1d(values)
        at_pi = mehler_propagate(st0, np.pi, spec)
        worst_r = max(worst_r, _l2(at_pi.values, -1j * reflect(values), DX))
        at_quarter = mehler_propagate(st0, np.pi / 2, spec)
        oracle = np.exp(-0.25j * np.pi) * (dft @ values)
        worst_f = max(worst_f, _l2(at_quarter.values, oracle, DX))

    # d=2 tensor identity: Fourier factor on the omega=1 axis, reflection on
    # the omega=2 axis, axis assignment pinned by the Hermite eigenrelation
    n2 = 256
    x2 = grid_axis(n2)
    vals = np.outer(hermite_function(2, x2), hermite_function(1, x2, 2.0))
    st2 = GridState(d=2, n=n2, L=L, values=vals)
    out2 = mehler_propagate(st2, np.pi / 2, QuadraticHamiltonianSpec(omegas=[1.0, 2.0]))
    ref = apply_recurrence_identity(st2, 1, "fourier", axis=0)
    ref = apply_recurrence_identity(ref, 1, "reflection", axis=1)
    tensor_err = _l2(out2.values, ref.values, 2 * L / n2, d=2)

    ok = worst_r <= 1e-7 and worst_f <= 1e-7 and tensor_err <= 1e-7
    _report(
        "A5 operator identities",
        ok,
        f"reflection err={worst_r:.1e} fourier err={worst_f:.1e} tensor err={tensor_err:.1e}",
    )


def test_A6_subprincipal_shift():
    p_base = 1.0
    details = []
    ok = True
    for c in (0.25, 0.5):
        start = time.time()
        spec = QuadraticHamiltonianSpec(omegas=[1.0], c=[c])
        state0 = state_1d(make_truncated_jump(grid_axis(), x0=p_base))
        out = affine_propagate(state0, np.pi, spec)
        rays = detect_wf(out).rays.sorted()
        target = -(p_base + 2 * c)
        ok &= len(rays) >= 1
        ok &= all(abs(r.base[0] - target) <= TWO_CELLS for r in rays)
        ok &= {r.dir[0] for r in rays} == {1.0, -1.0}

        quarter = affine_propagate(state0, np.pi / 2, spec)
        ratio = singularity_score(state0) / singularity_score(quarter)
        ok &= ratio >= 1e3 and len(detect_wf(quarter).rays) == 0
        elapsed = time.time() - start
        ok &= elapsed < 180
        details.append(
            f"c={c}: bases {[round(float(r.base[0]), 4) for r in rays]} target {target} "
            f"quarter drop {ratio:.1e} {elapsed:.0f}s"
        )
    _report("A6 subprincipal shift", bool(ok), "; ".join(details))


def test_A7_isotropic_transport():
    spec = QuadraticHamiltonianSpec(omegas=[1.0])
    state0 = state_1d(make_truncated_jump(grid_axis(), x0=1.0))
    before = detect_wf_iso(state0)
    ok = bool(before)
    tilts = [float(np.arcsin(abs(r.dir[0]))) for r in before]
    ok &= all(t <= 0.1 for t in tilts)

    after = detect_wf_iso(mehler_propagate(state0, np.pi, spec))
    ok &= bool(after)
    worst = 0.0
    for ray in after:
        best = min(
            float(np.arccos(np.clip(np.dot(ray.dir, -b.dir), -1, 1))) for b in before
        )
        worst = max(worst, best)
    ok &= worst <= 0.1
    _report(
        "A7 isotropic transport",
        ok,
        f"t=0 tilts {[round(t, 3) for t in tilts]}, antipodal mismatch {worst:.3f}",
    )


def test_A8_egorov():
    spec = QuadraticHamiltonianSpec(omegas=[1.0])
    x = grid_axis(1024)
    states = [state_1d(hermite_function(k, x), n=1024) for k in range(6)]
    worst = 0.0
    for mono in ({(1, 0): 1.0}, {(0, 1): 1.0}):
        a = HomogeneousComponent(1, monomials=mono, dimension=1)
        for t in (np.pi / 4, np.pi / 2, np.pi):
            worst = max(worst, egorov_check(a, t, spec, states))
    ok = worst <= 1e-7
    _report("A8 egorov", ok, f"max residual {worst:.2e}")


def test_A9_stationary_phase():
    start = time.time()
    ok = True
    slope_summary = []
    for prob in default_suite():
        report = verify_boundedness(prob, alpha_max=2)
        ok &= report.passed
        worst = max(report.slopes.values())
        slope_summary.append(f"{prob.name} max slope {worst:+.3f} (m={prob.m})")

    gp = gaussian_problem()
    worst_oracle = 0.0
    for lam in gp.lambda_grid:
        for y in gp.y_grid:
            err = abs(eval_I(gp, lam, y) - gaussian_oracle(lam, y))
            worst_oracle = max(worst_oracle, err * lam / 2.0)  # relative to 2/lambda
    ok &= worst_oracle <= 1.0

    orders = []
    for prob, y0 in ((gaussian_problem(), 0.2), (cubic_problem(), 0.2)):
        ox, op = critical_point_orders(prob, y0)
        orders.append((round(ox, 3), round(op, 3)))
        ok &= ox >= 0.95 and op >= 1.9
    elapsed = time.time() - start
    _report(
        "A9 stationary phase",
        bool(ok),
        f"{'; '.join(slope_summary)}; oracle err/(2/lam) max {worst_oracle:.2f}; "
        f"orders {orders} {elapsed:.0f}s",
    )


def test_A10_composition_consistency():
    from pathlib import Path

    scenario_dir = Path(__file__).resolve().parents[1] / "src" / "wavefront_lab" / "scenarios"
    ok = True
    worst = 0.0
    checked = 0
    for path in sorted(scenario_dir.glob("*.json")):
        config = ScenarioConfig.load(path)
        p = config.symbol()
        flow = HamiltonianFlow(p)
        if config.kind == "scan":
            # scan scenarios declare no rays; exercise the p1 = 0 equality on
            # a constructed wavefront set instead
            wf = WavefrontSet(
                [Ray(base=[0.5, 0.5], dir=[0.0, 1.0])], compact_support=True
            )
            t = np.pi / 2
            cone = gamma_scan(p, t, seed=config.seed)
            full = propagate_full(wf, t, p, cone, flow=flow)
            free = propagate_free(wf, t, p, cone, flow=flow)
            ok &= len(full) == len(free)
            for a, b in zip(full.sorted(), free.sorted()):
                ok &= bool(np.array_equal(a.base, b.base) and np.array_equal(a.dir, b.dir))
            checked += 1
            continue
        wf = config.declared_rays()
        p1_zero = p.p1.is_polynomial and not p.p1.monomials
        for t in config.raw.get("times", []):
            cone = gamma_scan(p, t, seed=config.seed)
            full = propagate_full(wf, t, p, cone, flow=flow)
            if p1_zero:
                free = propagate_free(wf, t, p, cone, flow=flow)
                ok &= len(full) == len(free)
                for a, b in zip(full.sorted(), free.sorted()):
                    ok &= bool(
                        np.array_equal(a.base, b.base) and np.array_equal(a.dir, b.dir)
                    )
            else:
                composed = propagate_free(
                    propagate_reduced(wf, t, p, flow=flow), t, p, cone, flow=flow
                )
                ok &= len(full) == len(composed)
                for a, b in zip(full.sorted(), composed.sorted()):
                    worst = max(
                        worst,
                        float(np.linalg.norm(a.base - b.base)),
                        float(np.arccos(np.clip(np.dot(a.dir, b.dir), -1, 1))),
                    )
            checked += 1
    ok &= worst <= 1e-6
    _report(
        "A10 composition consistency",
        bool(ok),
        f"{checked} scenario stages, max direct/composed gap {worst:.1e}",
    )
