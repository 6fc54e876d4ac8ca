"""Controller synthesis: the self-consistent initialization loop, switching gain,
peaking bound, cohomological feedforward, control law and invariance radius."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import cohomo, gosl, lyap, quat, realrep
from .bracket import BracketConstants, BracketSpec, compile_bracket
from .errors import AbortError, ConfigError, InfeasibleError, SingularityError

MAX_HALVINGS = 40
BETA_INIT = 0.5


@dataclass(frozen=True)
class PlantConfig:
    """Plant x' = N x + delta(x, t) + B u + D w with sliding output C x.

    ``margin`` pads the initial state norm to form the domain radius and bounds the
    reaching-phase excursion.  ``A_s`` is the reduced-dynamics matrix; when omitted
    it defaults to ``-alpha_s I``.
    """

    bracket: BracketSpec
    B: np.ndarray
    C: np.ndarray
    K: np.ndarray
    x0: np.ndarray
    s0: np.ndarray
    eta0: float
    margin: float
    D: Optional[np.ndarray] = None
    drift: Optional[np.ndarray] = None
    A_s: Optional[np.ndarray] = None
    alpha_s: Optional[float] = None
    L_r: float = 0.0
    w_max: float = 0.0
    L_L: Optional[float] = None

    def __post_init__(self):
        B = quat.as_hmatrix(self.B, "B")
        n, m = B.shape[:2]
        C = quat.as_hmatrix(self.C, "C")
        if C.shape[:2] != (m, n):
            raise ConfigError(f"C must be {m}x{n}, got {C.shape[:2]}")
        K = quat.as_hmatrix(self.K, "K")
        if K.shape[:2] != (m, m):
            raise ConfigError(f"K must be {m}x{m}, got {K.shape[:2]}")
        if self.bracket.n != n:
            raise ConfigError(f"bracket acts on H^{self.bracket.n} but B has {n} rows")
        D = np.zeros((n, 1, 4)) if self.D is None else quat.as_hmatrix(self.D, "D")
        if D.shape[0] != n:
            raise ConfigError(f"D must have {n} rows")
        drift = np.zeros((n, n, 4)) if self.drift is None else quat.as_hmatrix(self.drift, "drift")
        if self.A_s is None:
            if self.alpha_s is None:
                raise ConfigError("give either A_s or alpha_s")
            A_s = -self.alpha_s * quat.identity(n)
        else:
            A_s = quat.as_hmatrix(self.A_s, "A_s")
        if A_s.shape[:2] != (n, n):
            raise ConfigError(f"A_s must be {n}x{n}")
        x0 = quat.as_hvector(self.x0, n, "x0")
        s0 = quat.as_hvector(self.s0, m, "s0")
        if self.eta0 <= 0 or self.margin <= 0:
            raise ConfigError("eta0 and margin must be positive")
        try:
            realrep.pinv(realrep.phi_mat(B))
        except SingularityError as exc:
            raise ConfigError(f"B is not full column rank: {exc}") from exc
        G = realrep.phi_mat(quat.matmul(C, B))
        if abs(np.linalg.det(G)) < 1e-12:
            raise ConfigError("G = CB is singular")
        Kr = realrep.phi_mat(K)
        if realrep.sym_eig(Kr + Kr.T).lambda_min <= 0:
            raise ConfigError("K must satisfy Phi(K) + Phi(K)^T > 0")
        for name, val in (("B", B), ("C", C), ("K", K), ("D", D), ("drift", drift), ("A_s", A_s),
                          ("x0", x0), ("s0", s0)):
            object.__setattr__(self, name, val)

    @property
    def n(self):
        return self.B.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def A_real(self):
        return realrep.phi_mat(self.A_s)

    @property
    def decay_margin(self):
        return lyap.decay_margin(self.A_real)

    @property
    def nominal_growth(self):
        return realrep.op_norm(realrep.phi_mat(self.drift)) if self.L_L is None else float(self.L_L)


@dataclass(frozen=True)
class Gains:
    """Operator norms of the plant matrices in the real representation."""

    c_B: float
    c_C: float
    c_Bplus: float
    c_G: float
    K_op: float
    D_op: float

    @property
    def chain(self):
        return self.c_C * self.c_B * self.c_Bplus


def plant_gains(cfg):
    Br = realrep.phi_mat(cfg.B)
    Cr = realrep.phi_mat(cfg.C)
    _, c_bp = realrep.pinv(Br)
    Ginv = np.linalg.inv(realrep.phi_mat(quat.matmul(cfg.C, cfg.B)))
    return Gains(
        c_B=realrep.op_norm(Br),
        c_C=realrep.op_norm(Cr),
        c_Bplus=c_bp,
        c_G=realrep.op_norm(Ginv),
        K_op=realrep.op_norm(realrep.phi_mat(cfg.K)),
        D_op=realrep.op_norm(realrep.phi_mat(cfg.D)),
    )


def eta_gain(cfg, M0, r_max, gains=None):
    """eta = c_C c_B c_B+ R_max + ||K|| c_C M0 + eta0."""
    g = plant_gains(cfg) if gains is None else gains
    return g.chain * r_max + g.K_op * g.c_C * M0 + cfg.eta0


def lambda_peaking(cfg, M0, eta, constants, gains=None):
    """Reaching-phase growth bound.

    L_L M0 + deltabar + c_B [c_B+ (deltabar + R_max) + c_G (eta + ||K|| M0)] + ||D|| w_max.
    """
    g = plant_gains(cfg) if gains is None else gains
    db, rm = constants.deltabar_max, constants.r_max
    return (cfg.nominal_growth * M0 + db
            + g.c_B * (g.c_Bplus * (db + rm) + g.c_G * (eta + g.K_op * M0))
            + g.D_op * cfg.w_max)


@dataclass(frozen=True)
class InvarianceChecks:
    R: float
    R_leq_eps_star: bool
    strict_inclusion: bool
    sqrt2_M0_leq_eps_star: bool


def invariance_radius(M0, lmi, c_inf, eps_star):
    """R = sqrt(kappa(P*) M0^2 + C_inf / (lambda_min(P*) beta*)) and its two tests."""
    ev = realrep.sym_eig(lmi.P_star).eigenvalues
    kappa = float(ev[-1] / ev[0])
    R = math.sqrt(kappa * M0 * M0 + c_inf / (float(ev[0]) * lmi.beta_star))
    return InvarianceChecks(R, R <= eps_star, R <= M0, math.sqrt(2.0) * M0 <= eps_star)


@dataclass(frozen=True)
class SynthesisResult:
    M0: float
    eta: float
    lmi: lyap.LmiSolution
    gosl: gosl.GoslConstants
    halvings: int
    peaking_ok: bool
    invariance_ok: bool
    R_invariance: float
    eps_star: float
    rho_eff: float
    mu_Y: float
    c_inf: float
    kappa_inf: float
    lambda_peak: float
    cnc: cohomo.CncBundle
    gains: Gains
    audit: tuple = field(default_factory=tuple)


def algorithm1(cfg, constants: BracketConstants, *, eps_star=None, beta_init=BETA_INIT,
               young="half", max_halvings=MAX_HALVINGS, simplified=False):
    """Self-consistent initialization.

    Step order: fix M0 from the initial state, abort when it exceeds eps*/sqrt(2),
    test LMI feasibility at P = I, compute the bound bundle and eta, test peaking,
    solve the LMI, test the invariance threshold.  A failed feasibility or invariance
    test halves M0 and reruns everything from scratch.
    """
    e = constants.eps_star if eps_star is None else float(eps_star)
    g = plant_gains(cfg)
    alpha = cfg.decay_margin
    A_real = cfg.A_real
    bundle = cohomo.cnc_bundle(constants.C2, e)
    mu0 = lyap.initial_mu(A_real)
    audit = []
    M0 = quat.norm(cfg.x0) + cfg.margin
    audit.append({"step": "fix_M0", "M0": M0})
    if M0 > e / math.sqrt(2.0):
        raise AbortError(f"initial state too large: M0 = {M0:.6g} > eps*/sqrt(2) = {e / math.sqrt(2):.6g}",
                         step="fix_M0", audit=audit)
    halvings = 0
    while True:
        gc = gosl.gosl_constants(constants.C2, bundle.cnc, M0, e)
        rho_eff = gc.rho_tight + 2.0 * cfg.L_r * M0
        feas = bool(beta_init + rho_eff * mu0 < 2.0 * alpha)
        audit.append({"step": "initial_feasibility", "M0": M0, "rho_eff": rho_eff, "mu0": mu0,
                      "lhs": beta_init + rho_eff * mu0, "rhs": 2.0 * alpha, "ok": feas})
        if feas:
            eta = eta_gain(cfg, M0, gc.r_max, g)
            lam = lambda_peaking(cfg, M0, eta, gc, g)
            t_max = quat.norm(cfg.s0) / cfg.eta0
            peak_ok = bool(t_max * lam < cfg.margin)
            audit.append({"step": "gain", "M0": M0, "eta": eta, "r_max": gc.r_max})
            audit.append({"step": "peaking", "T_max": t_max, "Lambda": lam, "ok": peak_ok})
            if not peak_ok:
                raise AbortError("peaking bound violated: reduce ||s(0)|| or increase eta0",
                                 step="peaking", audit=audit)
            if young == "opt":
                yp = lyap.mu_opt(1.0, g.chain * gc.r_max, gc.ell_tight, rho_eff)
                mu_Y = rho_eff / 2.0 if yp.clamped else yp.value
            else:
                mu_Y = rho_eff / 2.0
            problem = lyap.LmiProblem(A_real, rho_eff, mu_Y, simplified=simplified)
            try:
                lmi = lyap.iterate_lmi(problem, mu0=mu0)
                lmi_ok = True
            except InfeasibleError as exc:
                lmi_ok = False
                audit.append({"step": "lmi", "ok": False, "reason": str(exc)})
            if lmi_ok:
                audit.append({"step": "lmi", "ok": True, "beta_star": lmi.beta_star, "mu_lmi": lmi.mu_lmi,
                              "iterations": lmi.iterations, "mu_trace": list(lmi.mu_trace)})
                c_inf = lyap.c_infty(lmi.mu_lmi, g.chain * gc.r_max, gc.ell_tight, rho_eff, mu_Y)
                kappa = lyap.kappa_infty(lmi.mu_lmi, g.chain, bundle.cnc, e, constants.C2, rho_eff, mu_Y)
                lmin = lmi.lambda_min
                inv_ok = bool(lmi.beta_star * lmin > kappa and math.sqrt(2.0) * M0 <= e)
                audit.append({"step": "invariance", "beta_lambda_min": lmi.beta_star * lmin,
                              "kappa_inf": kappa, "C_inf": c_inf, "ok": inv_ok})
                if inv_ok:
                    checks = invariance_radius(M0, lmi, c_inf, e)
                    audit.append({"step": "return", "M0": M0, "R": checks.R})
                    return SynthesisResult(M0, eta, lmi, gc, halvings, True, True, checks.R, e, rho_eff,
                                           mu_Y, c_inf, kappa, lam, bundle, g, tuple(audit))
        if halvings >= max_halvings:
            last = next((a["step"] for a in reversed(audit) if not a.get("ok", True)), "none")
            raise AbortError(f"halving cap of {max_halvings} exceeded without a certificate "
                             f"(last failing step: {last})", step="halving_cap", audit=audit)
        M0 *= 0.5
        halvings += 1
        audit.append({"step": "halve", "M0": M0, "halvings": halvings})


class Controller:
    """Control law u = -Delta_app(x, t) - G^{-1} (eta sgn(s) + K s) with cached matrices."""

    def __init__(self, cfg, eta, eps_star, grid=gosl.ONLINE_GRID):
        self.cfg = cfg
        self.eta = float(eta)
        self.eps_star = float(eps_star)
        self.grid = grid
        self.spec = compile_bracket(cfg.bracket)
        Br = realrep.phi_mat(cfg.B)
        self.B_plus, _ = realrep.pinv(Br)
        self.proj = Br @ self.B_plus
        self.G_inv = np.linalg.inv(realrep.phi_mat(quat.matmul(cfg.C, cfg.B)))
        self.K_real = realrep.phi_mat(cfg.K)
        self._dw = cohomo.d_omega0(self.spec, eps_star)

    def select(self, x, t=0.0):
        return gosl.defect(self.spec, self.cfg.B, x, t, self.eps_star, self.grid, self.proj)

    def delta_app(self, x, t=0.0, selection=None):
        """B+ applied to the projected coboundary d omega0(x, x + xi1, x + xi2)."""
        x = quat.as_hvector(x, self.cfg.n)
        if not np.any(x):
            return np.zeros((self.cfg.m, 4))
        sel = self.select(x, t) if selection is None else selection
        e = self._dw(x, x + sel.xi1, x + sel.xi2)
        return realrep.phi_inv_vec(self.B_plus @ (self.proj @ realrep.phi_vec(e)))

    def __call__(self, x, s, t=0.0, selection=None, boundary_layer=None):
        s = quat.as_hvector(s, self.cfg.m)
        if boundary_layer is None:
            sg = quat.sgn_h(s)
        else:
            sg = s / max(quat.norm(s), boundary_layer)
        v = self.eta * realrep.phi_vec(sg) + self.K_real @ realrep.phi_vec(s)
        return -self.delta_app(x, t, selection) - realrep.phi_inv_vec(self.G_inv @ v)


def delta_app(cfg, x, t, selection, eps_star=None):
    e = cfg.bracket.epsilon0 if eps_star is None else eps_star
    return Controller(cfg, 0.0, e).delta_app(x, t, selection)


def control(cfg, x, s, t, eta, eps_star=None, selection=None):
    e = cfg.bracket.epsilon0 if eps_star is None else eps_star
    return Controller(cfg, eta, e)(x, s, t, selection)
