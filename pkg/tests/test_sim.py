import csv
import math

import numpy as np
import pytest

from conftest import X0, make_plant
from quatsmc import bracket, quat, sim, synth
from quatsmc.errors import ConfigError, DivergenceError


@pytest.fixture(scope="module")
def zero_setup():
    p = make_plant(spec=bracket.zero_bracket())
    return p, synth.algorithm1(p, bracket.bracket_constants(p.bracket, 10_000))


def test_uncontrolled_zero_bracket_stays_put(zero_setup):
    p, r = zero_setup
    traj = sim.integrate_closed_loop(sim.SimConfig(p, r, dt=0.01, t_end=0.5, control_on=False))
    assert np.allclose(traj.states, X0, atol=0)
    assert not np.any(traj.controls)


def test_reduced_linear_decay(synthesis, plant):
    cfg = sim.SimConfig(plant, synthesis, dt=1e-2, t_end=2.0)
    traj = sim.integrate_reduced(cfg, w_r=np.zeros(4), include_defect=False)
    ref = np.exp(-traj.times)[:, None] * X0
    assert np.allclose(traj.states[:, 0], ref, atol=1e-10)
    V0 = X0 @ synthesis.lmi.P_star @ X0
    assert np.allclose(traj.lyapunov, V0 * np.exp(-2 * traj.times), rtol=1e-8)


def test_reduced_origin_is_equilibrium(synthesis):
    p = make_plant(x0=np.zeros(4))
    traj = sim.integrate_reduced(sim.SimConfig(p, synthesis, dt=1e-2, t_end=0.5), w_r=np.zeros(4))
    assert not np.any(traj.states)


def test_reduced_default_input_magnitude(synthesis, plant):
    traj = sim.integrate_reduced(sim.SimConfig(plant, synthesis, dt=1e-2, t_end=0.05), include_defect=False)
    # x' = -x + w_r from x0: the first step moves by about dt (w_r - x0)
    step = traj.states[1, 0] - traj.states[0, 0] * math.exp(-0.01)
    w_norm = synthesis.gains.chain * synthesis.gosl.r_max
    assert quat.norm(step) == pytest.approx(w_norm * (1 - math.exp(-0.01)), rel=1e-6)


def test_envelope_detects_a_manufactured_violation():
    t = np.linspace(0, 1, 11)
    V = np.exp(-t)
    ok = sim.Trajectory(t, None, None, None, V)
    assert sim.envelope_check(ok, 1.0, 0.0).passed
    bad = V.copy()
    bad[6] += 1e-3
    rep = sim.envelope_check(sim.Trajectory(t, None, None, None, bad), 1.0, 0.0, tol=1e-6)
    assert rep.violations == 1 and rep.first_violation_index == 6
    assert rep.first_violation_time == pytest.approx(0.6)
    assert rep.max_overshoot == pytest.approx(1e-3, rel=1e-9)
    assert sim.envelope_tolerance(2.0, 0.1) == pytest.approx(2e-6 + 0.02)


def test_csv_layout(tmp_path, synthesis, plant):
    traj = sim.integrate_closed_loop(sim.SimConfig(plant, synthesis, dt=1e-2, t_end=0.03))
    path = tmp_path / "out.csv"
    sim.write_csv(traj, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "x1_re", "x1_i", "x1_j", "x1_k", "s1_re", "s1_i", "s1_j", "s1_k", "V_r"]
    assert len(rows) == 5
    assert float(rows[1][1]) == X0[0]


def test_rk4_is_fourth_order(reaching_synthesis, reaching_plant):
    cfg = sim.SimConfig(reaching_plant, reaching_synthesis, dt=1e-2)
    _, diffs, orders = sim.convergence_order(cfg, horizon=0.2, refinements=3)
    assert all(d > 0 for d in diffs)
    assert all(3.5 < o < 4.5 for o in orders)


def test_sliding_energy_decreases_while_reaching(reaching_synthesis, reaching_plant):
    traj = sim.integrate_closed_loop(sim.SimConfig(reaching_plant, reaching_synthesis, dt=1e-3, t_end=0.6))
    s = np.linalg.norm(traj.sliding.reshape(len(traj), -1), axis=1)
    before = s[s > 1e-4]
    assert np.all(np.diff(before) < 0)
    assert traj.reaching_time is not None
    assert traj.reaching_time <= sim.reaching_bound(reaching_plant, 1e-3)


def test_divergence_aborts(synthesis):
    p = make_plant(drift=50.0 * quat.ONE)
    cfg = sim.SimConfig(p, synthesis, dt=1e-2, t_end=2.0, control_on=False)
    with pytest.raises(DivergenceError):
        sim.integrate_closed_loop(cfg)


def test_sim_config_validation(synthesis, plant):
    with pytest.raises(ConfigError):
        sim.SimConfig(plant, synthesis, dt=0.0)
    with pytest.raises(ConfigError):
        sim.SimConfig(plant, synthesis, boundary_layer=-1.0)
    assert sim.SimConfig(plant, synthesis, dt=1e-3, t_end=10.0).steps == 10_000


def test_disturbance_is_seeded():
    a = sim.constant_disturbance(1, 0.3, seed=5)(0.0)
    b = sim.constant_disturbance(1, 0.3, seed=5)(7.0)
    assert np.array_equal(a, b) and quat.norm(a) == pytest.approx(0.3)
