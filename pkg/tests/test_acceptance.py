"""One test per acceptance criterion; each prints a PASS/FAIL line with its numbers."""
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from quatsmc import bracket, cohomo, gosl, lyap, quat, realrep, sim


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number:2d} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def test_criterion_01_jacobiator_values(verdict):
    spec = bracket.test_bracket()
    bracket.jacobiator(spec, quat.I, quat.J, quat.K)
    t0 = time.perf_counter()
    a = bracket.jacobiator(spec, quat.ONE + quat.I, quat.J, quat.K)
    elapsed = time.perf_counter() - t0
    b = bracket.jacobiator(spec, quat.I, quat.J, quat.K)
    err = float(np.abs(a - 0.04 * quat.I).max())
    ok = err <= 1e-12 and not np.any(b) and elapsed < 1e-3
    verdict(1, ok, f"J(1+i,j,k) error {err:.1e}, J(i,j,k) = {b.tolist()}, {elapsed * 1e3:.3f} ms")


def test_criterion_02_constant_estimation(verdict):
    spec = bracket.test_bracket()
    t0 = time.perf_counter()
    A = bracket.estimate_A(spec, 50_000)
    six_c2 = 6.0 * bracket.estimate_C2(spec, 50_000)
    elapsed = time.perf_counter() - t0
    ok = abs(A - 0.2) <= 0.01 * 0.2 and abs(six_c2 - 0.0399) <= 0.05 * 0.0399 and elapsed < 10.0
    verdict(2, ok, f"A = {A:.6f}, 6 C2 = {six_c2:.6f}, {elapsed:.2f} s")


def test_criterion_03_admissible_radius(verdict):
    generic = bracket.admissible_radius(0.2, 0.0, 0.00665, 0.5)
    anti = bracket.admissible_radius(0.2, 0.0, 0.00665, 0.5, antisymmetric=True)
    verdict(3, generic == 0.3125 and anti == 0.5, f"generic {generic!r}, antisymmetric {anti!r}")


def test_criterion_04_constants_table(verdict, synthesis):
    g = synthesis.gosl
    b = synthesis.cnc
    rows = {
        "deltabar_max": (g.deltabar_max, 6.79e-4),
        "rho_tight": (g.rho_tight, 0.0202),
        "ell_tight": (g.ell_tight, 2.72e-3),
        "C_nc": (b.cnc, 0.0798),
        "omega_op": (b.omega_op, 0.0166),
        "R_max": (g.r_max, 1.36e-3),
    }
    within = {k: abs(v - e) <= 0.02 * e for k, (v, e) in rows.items()}
    ok = all(within.values()) and g.r_max <= 1.36e-3
    detail = ", ".join(f"{k} {v:.6g}" for k, (v, _) in rows.items())
    verdict(4, ok, detail)


def test_criterion_05_norm_transfer(verdict):
    t0 = time.perf_counter()
    rep = realrep.norm_transfer_suite(cases=100, max_n=3, seed=0, tol=1e-10)
    elapsed = time.perf_counter() - t0
    ok = rep.passed and rep.cases == 100 and elapsed < 5.0
    verdict(5, ok, f"{rep.cases} operators, max difference {rep.max_difference:.1e}, {elapsed:.2f} s")


def test_criterion_06_lmi(verdict, synthesis):
    rho, mu_y = 0.0202, 0.0101
    th = lyap.theta(1.0, mu_y, rho)
    sol = lyap.iterate_lmi(lyap.LmiProblem(-np.eye(4), rho, mu_y))
    p_is_identity = np.allclose(sol.P_star, np.eye(4), atol=1e-9)
    ok_test = (abs(sol.beta_star - (2.0 - th)) <= 1e-6 and abs(sol.beta_star - 1.9394) <= 1e-6
               and p_is_identity and sol.mu_lmi == pytest.approx(1.0, abs=1e-9)
               and sol.iterations == 1 and sol.converged)
    gaps = []
    for seed in range(5):
        a = -np.random.default_rng(600 + seed).uniform(0.5, 3.0, 8)
        ref = oracles.diagonal_lmi_beta(a, 0.2, 5.0)
        got = lyap.solve_lmi(lyap.LmiProblem(np.diag(a), 0.0, 0.0, mu_k=5.0, theta_value=0.2)).beta_star
        gaps.append(abs(got - ref))
    # the synthesized certificate uses the unrounded rho_eff
    syn_gap = abs(synthesis.lmi.beta_star - (2.0 - synthesis.lmi.theta))
    ok = ok_test and max(gaps) <= 1e-4 and syn_gap <= 1e-6
    verdict(6, ok, f"beta* {sol.beta_star:.10f} (2 - Theta = {2 - th:.10f}), iterations {sol.iterations}, "
                   f"mu_LMI {sol.mu_lmi:.6g}; synthesized beta* {synthesis.lmi.beta_star:.6f} "
                   f"(gap {syn_gap:.1e}); diagonal oracle max gap {max(gaps):.1e}")


def test_criterion_07_kappa(verdict, synthesis):
    k = synthesis.kappa_inf
    margin = synthesis.lmi.beta_star * synthesis.lmi.lambda_min
    ok = abs(k - 3.0e-2) <= 0.1 * 3.0e-2 and margin > k and synthesis.invariance_ok
    verdict(7, ok, f"kappa_inf {k:.6g}, beta* lambda_min(P*) {margin:.6g}")


def test_criterion_08_gosl(verdict, table_constants):
    c = gosl.gosl_constants(table_constants.C2, cohomo.cnc_bundle(table_constants.C2, 0.3125).cnc, 0.1, 0.3125)
    t0 = time.perf_counter()
    rep = gosl.verify_gosl(bracket.test_bracket(), quat.ONE, c, pairs=10_000, seed=0)
    elapsed = time.perf_counter() - t0
    ok = rep.violations == 0 and rep.pairs == 10_000 and elapsed < 60.0
    verdict(8, ok, f"{rep.violations} violations in {rep.pairs} pairs, max slack {rep.max_slack:.3e}, "
                   f"{elapsed:.1f} s")


def test_criterion_09_simulation(verdict, reaching_plant, reaching_synthesis):
    syn = reaching_synthesis
    dt = 1e-3
    t0 = time.perf_counter()
    cfg = sim.SimConfig(reaching_plant, syn, dt=dt, t_end=10.0)
    reduced = sim.integrate_reduced(cfg)
    env = sim.envelope_check(reduced, syn.lmi.beta_star, syn.c_inf)
    closed = sim.integrate_closed_loop(cfg)
    elapsed = time.perf_counter() - t0
    bound = sim.reaching_bound(reaching_plant, dt)
    reached = closed.reaching_time is not None and closed.reaching_time <= bound
    ok = env.passed and env.samples == 10_001 and reached and elapsed < 30.0
    verdict(9, ok, f"envelope violations {env.violations}/{env.samples} (max overshoot {env.max_overshoot:.2e}), "
                   f"reaching time {closed.reaching_time} <= {bound:.4f}, {elapsed:.1f} s")


MISMATCH_B = np.array([[quat.ONE], [0 * quat.ONE]])


def test_criterion_10_cmc(verdict):
    good = cohomo.cmc_check(bracket.test_bracket(), quat.ONE, 0.3125)
    bad = cohomo.cmc_check(bracket.coordinate_bracket(2, 1), MISMATCH_B, 0.3125)
    ok = good.passed and good.max_residual == 0.0 and not bad.passed and bad.max_residual > 0.0
    verdict(10, ok, f"test system residual {good.max_residual:.1e}; mismatch plant residual "
                    f"{bad.max_residual:.3e} (fails: {not bad.passed})")


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=4, max_size=4), st.integers(0, 1000))
def test_criterion_10_negative_control_property(b, seed):
    # actuating only the coordinate the bracket ignores can never match its defect
    q = np.array(b)
    if np.linalg.norm(q) < 1e-3:
        return
    B = np.array([[q], [0 * quat.ONE]])
    rep = cohomo.cmc_check(bracket.coordinate_bracket(2, 1), B, 0.3125, samples=32, seed=seed)
    assert not rep.passed and rep.max_residual > 0.0
