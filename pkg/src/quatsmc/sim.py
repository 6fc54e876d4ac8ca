"""Fixed-step simulation of the closed loop and of the reduced sliding dynamics,
with reaching-time measurement and a check of the exponential Lyapunov envelope.

Both integrators use classical RK4.  The defect selection (xi1, xi2) is searched
once per step at the step's initial state and held over the four stages; the
defect itself and the feedforward are evaluated at every stage.  With
``freeze_selection`` the first selection is kept for the whole run.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import quat, realrep
from ._sampling import chunk_rng
from .bracket import compile_bracket, jacobiator
from .errors import ConfigError, DivergenceError
from .gosl import ONLINE_GRID
from .synth import Controller, PlantConfig, SynthesisResult

DIVERGENCE_FACTOR = 10.0
ENVELOPE_REL = 1e-6


def constant_disturbance(p, w_max, seed=0):
    """Constant disturbance of norm ``w_max`` along a seeded direction in H^p."""
    direction = quat.random_hvectors(chunk_rng(seed, 11), 1, p)[0]
    w = float(w_max) * direction
    return lambda t: w


@dataclass(frozen=True)
class SimConfig:
    plant: PlantConfig
    synthesis: SynthesisResult
    dt: float = 1e-3
    t_end: float = 10.0
    boundary_layer: float = 1e-4
    disturbance: Optional[Callable[[float], np.ndarray]] = None
    seed: int = 0
    control_on: bool = True
    freeze_selection: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.boundary_layer > 0:
            raise ConfigError(f"boundary_layer must be positive, got {self.boundary_layer}")
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if self.disturbance is None:
            p = self.plant.D.shape[1]
            object.__setattr__(self, "disturbance", constant_disturbance(p, self.plant.w_max, self.seed))

    @property
    def steps(self):
        return int(round(self.t_end / self.dt))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    sliding: np.ndarray
    controls: np.ndarray
    lyapunov: np.ndarray
    reaching_time: Optional[float] = None

    def __len__(self):
        return len(self.times)


def _rk4(f, y, t, dt):
    k1 = f(y, t)
    k2 = f(y + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = f(y + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = f(y + dt * k3, t + dt)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _diverged(x, limit, t):
    r = quat.norm(x)
    if not np.isfinite(r) or r > limit:
        raise DivergenceError(f"state norm {r:.6g} exceeded {limit:.6g} at t = {t:.6g}")


def integrate_closed_loop(cfg: SimConfig) -> Trajectory:
    """Integrate x' = N x + delta + B u + D w together with the running integral
    I' = C (N x + D w); the sliding variable is s = C x - C x(0) - I + s0.

    The sign term is regularized as s / max(||s||, boundary_layer).
    """
    plant, syn = cfg.plant, cfg.synthesis
    n, m = plant.n, plant.m
    d = 4 * n
    spec = compile_bracket(plant.bracket)
    ctrl = Controller(plant, syn.eta, syn.eps_star, ONLINE_GRID)
    Nr = realrep.phi_mat(plant.drift)
    Br = realrep.phi_mat(plant.B)
    Cr = realrep.phi_mat(plant.C)
    Dr = realrep.phi_mat(plant.D)
    P = syn.lmi.P_star
    Cx0 = Cr @ realrep.phi_vec(plant.x0)
    s_off = realrep.phi_vec(plant.s0)
    bl = cfg.boundary_layer
    limit = DIVERGENCE_FACTOR * syn.eps_star
    zero_u = np.zeros((m, 4))

    def sliding(y):
        return Cr @ y[:d] - Cx0 - y[d:] + s_off

    def control(y, t, sel):
        if not cfg.control_on:
            return zero_u
        return ctrl(y[:d].reshape(n, 4), sliding(y).reshape(m, 4), t, sel, bl)

    def rhs(sel):
        def f(y, t):
            x = y[:d].reshape(n, 4)
            delta = jacobiator(spec, x, x + sel.xi1, x + sel.xi2, t).reshape(d)
            u = realrep.phi_vec(control(y, t, sel))
            w = realrep.phi_vec(cfg.disturbance(t))
            nominal = Nr @ y[:d] + Dr @ w
            return np.concatenate([nominal + delta + Br @ u, Cr @ nominal])
        return f

    steps = cfg.steps
    times = cfg.dt * np.arange(steps + 1)
    X = np.empty((steps + 1, n, 4))
    S = np.empty((steps + 1, m, 4))
    U = np.empty((steps + 1, m, 4))
    V = np.empty(steps + 1)
    y = np.concatenate([realrep.phi_vec(plant.x0), np.zeros(4 * m)])
    reach = 0.0 if quat.norm(plant.s0) <= bl else None
    sel = None
    for k in range(steps + 1):
        t = times[k]
        x = y[:d].reshape(n, 4)
        if sel is None or not cfg.freeze_selection:
            sel = ctrl.select(x, t)
        X[k] = x
        S[k] = sliding(y).reshape(m, 4)
        U[k] = control(y, t, sel)
        V[k] = y[:d] @ P @ y[:d]
        if reach is None and quat.norm(S[k]) <= bl:
            reach = float(t)
        if k == steps:
            break
        y = _rk4(rhs(sel), y, t, cfg.dt)
        _diverged(y[:d], limit, times[k + 1])
    return Trajectory(times, X, S, U, V, reach)


def integrate_reduced(cfg: SimConfig, A_s=None, P_star=None, beta_star=None,
                      w_r=None, include_defect=True) -> Trajectory:
    """Integrate x_r' = A_s x_r + delta(x_r) + w_r from x_r(0) = x0 and record
    V_r = x_r^T Phi(P*) x_r.

    ``w_r`` defaults to a constant seeded direction with the largest admissible
    magnitude c_C c_B c_B+ R_max.  ``beta_star`` is unused by the integration and
    accepted so callers can pass the certificate they intend to check.
    """
    plant, syn = cfg.plant, cfg.synthesis
    n, m = plant.n, plant.m
    d = 4 * n
    A = plant.A_real if A_s is None else np.asarray(A_s, dtype=float)
    if A.ndim == 3:
        A = realrep.phi_mat(A)
    if A.shape != (d, d):
        raise ConfigError(f"A_s must be {d}x{d} in the real representation, got {A.shape}")
    P = syn.lmi.P_star if P_star is None else np.asarray(P_star, dtype=float)
    spec = compile_bracket(plant.bracket)
    ctrl = Controller(plant, syn.eta, syn.eps_star, ONLINE_GRID)
    if w_r is None:
        w_r = constant_disturbance(n, syn.gains.chain * syn.gosl.r_max, cfg.seed + 1)(0.0)
    wr = realrep.phi_vec(quat.as_hvector(w_r, n, "w_r"))
    limit = DIVERGENCE_FACTOR * syn.eps_star

    def rhs(sel):
        def f(y, t):
            out = A @ y + wr
            if include_defect:
                x = y.reshape(n, 4)
                out = out + jacobiator(spec, x, x + sel.xi1, x + sel.xi2, t).reshape(d)
            return out
        return f

    steps = cfg.steps
    times = cfg.dt * np.arange(steps + 1)
    X = np.empty((steps + 1, n, 4))
    V = np.empty(steps + 1)
    y = realrep.phi_vec(plant.x0)
    sel = None
    for k in range(steps + 1):
        X[k] = y.reshape(n, 4)
        V[k] = y @ P @ y
        if k == steps:
            break
        if include_defect and (sel is None or not cfg.freeze_selection):
            sel = ctrl.select(X[k], times[k])
        y = _rk4(rhs(sel), y, times[k], cfg.dt)
        _diverged(y, limit, times[k + 1])
    zeros = np.zeros((steps + 1, m, 4))
    return Trajectory(times, X, zeros, zeros.copy(), V, None)


def envelope_tolerance(v0, dt):
    """Slack 1e-6 V(0) plus dt^2 V(0) for the integrator and the held selection."""
    return ENVELOPE_REL * v0 + dt * dt * v0


@dataclass(frozen=True)
class EnvelopeReport:
    violations: int
    samples: int
    max_overshoot: float
    first_violation_index: Optional[int]
    first_violation_time: Optional[float]
    tol: float

    @property
    def passed(self):
        return self.violations == 0


def envelope_check(traj: Trajectory, beta_star, c_inf, tol=None) -> EnvelopeReport:
    """Count samples with V(t) > exp(-beta t) V(0) + C_inf / beta + tol.

    ``max_overshoot`` is the largest V minus envelope without the tolerance.
    """
    V = np.asarray(traj.lyapunov, dtype=float)
    t = np.asarray(traj.times, dtype=float)
    if tol is None:
        dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
        tol = envelope_tolerance(V[0], dt)
    env = np.exp(-beta_star * t) * V[0] + c_inf / beta_star
    over = V - env
    bad = np.flatnonzero(over > tol)
    first = int(bad[0]) if len(bad) else None
    return EnvelopeReport(
        violations=int(len(bad)),
        samples=int(len(V)),
        max_overshoot=float(over.max()),
        first_violation_index=first,
        first_violation_time=None if first is None else float(t[first]),
        tol=float(tol),
    )


def reaching_bound(plant, dt):
    """||s0|| / eta0 + 2 dt."""
    return quat.norm(plant.s0) / plant.eta0 + 2.0 * dt


def convergence_order(cfg: SimConfig, horizon=0.1, refinements=3):
    """Terminal state differences over successive dt halvings on a short horizon.

    The defect selection is frozen at its initial value: the per-step argmax over a
    finite grid is discontinuous in x, which would mask the integrator order.

    Returns ``(dts, differences, orders)`` where ``differences[i]`` compares the runs
    at ``dts[i]`` and ``dts[i + 1]`` and ``orders`` holds log2 ratios of consecutive
    differences.
    """
    dts, finals = [], []
    for r in range(refinements + 1):
        dt = cfg.dt / 2 ** r
        sub = SimConfig(cfg.plant, cfg.synthesis, dt, horizon, cfg.boundary_layer,
                        cfg.disturbance, cfg.seed, cfg.control_on, True)
        traj = integrate_closed_loop(sub)
        dts.append(dt)
        finals.append(traj.states[-1])
    diffs = [float(quat.norm(finals[i] - finals[i + 1])) for i in range(refinements)]
    orders = [math.log2(diffs[i] / diffs[i + 1]) if diffs[i + 1] > 0 and diffs[i] > 0 else math.nan
              for i in range(refinements - 1)]
    return dts, diffs, orders


def _header(n, m):
    parts = ("re", "i", "j", "k")
    cols = ["t"]
    cols += [f"x{r + 1}_{p}" for r in range(n) for p in parts]
    cols += [f"s{r + 1}_{p}" for r in range(m) for p in parts]
    return cols + ["V_r"]


def write_csv(traj: Trajectory, path):
    """One row per step: t, the 4n state components, the 4m sliding components, V_r."""
    N, n, _ = traj.states.shape
    m = traj.sliding.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_header(n, m))
        for k in range(N):
            row = [traj.times[k], *traj.states[k].reshape(-1), *traj.sliding[k].reshape(-1), traj.lyapunov[k]]
            w.writerow([format(float(v), ".17g") for v in row])
