"""Iterative LMI certificate for the reduced sliding dynamics.

The LMI in the real representation reads

    A^T P + P A + Theta I <= -beta P,    I <= P <= mu_k I,

with Theta(mu_k, mu_Y) = mu_k (2 rho + mu_Y) + (rho - mu_Y).  Feasibility at a fixed
beta is decided through shifted Lyapunov equations and confirmed by an eigenvalue
check of the certificate; the largest feasible beta is found by bisection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from . import realrep
from .errors import DomainError, InfeasibleError, PreconditionError

CERT_TOL = 1e-9
# the search accepts only certificates that hold to roundoff, so reported ones clear CERT_TOL easily
SEARCH_TOL = 1e-12
BISECT_TOL = 1e-10
BISECT_MAX = 60
# the box iteration contracts linearly, so it stops on a looser relative change than the bisection
MU_TOL = 1e-4


def theta(mu_k, mu_Y, rho_eff):
    """Theta(mu_k, mu_Y) = mu_k (2 rho + mu_Y) + (rho - mu_Y)."""
    if rho_eff == 0.0 and mu_Y == 0.0:
        return 0.0
    if not 0.0 < mu_Y < rho_eff:
        raise DomainError(f"Young parameter must lie in (0, rho_eff) = (0, {rho_eff}), got {mu_Y}")
    return mu_k * (2.0 * rho_eff + mu_Y) + (rho_eff - mu_Y)


def theta_simplified(mu_k, rho_eff):
    """Coefficient rho_eff * mu_k of the simplified form without the Young term."""
    return rho_eff * mu_k


def lyap_solve(A, Q):
    """Solve A^T X + X A = -Q by a dense solve on the vectorized system."""
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = A.shape[0]
    eye = np.eye(n)
    M = np.kron(A.T, eye) + np.kron(eye, A.T)
    X = np.linalg.solve(M, -Q.reshape(-1)).reshape(n, n)
    return 0.5 * (X + X.T)


def decay_margin(A_real):
    """alpha_s = -lambda_max((A + A^T) / 2)."""
    A = np.asarray(A_real, dtype=float)
    return -realrep.sym_eig(0.5 * (A + A.T)).lambda_max


@dataclass(frozen=True)
class LmiProblem:
    A_real: np.ndarray
    rho_eff: float
    mu_Y: float
    mu_k: float = 1.0
    tol: float = BISECT_TOL
    max_iters: int = 50
    mu_tol: float = MU_TOL
    simplified: bool = False
    theta_value: Optional[float] = None

    def __post_init__(self):
        if self.mu_k < 1.0:
            raise DomainError(f"mu_k must be >= 1, got {self.mu_k}")

    @property
    def theta(self):
        if self.theta_value is not None:
            return float(self.theta_value)
        if self.simplified:
            return theta_simplified(self.mu_k, self.rho_eff)
        return theta(self.mu_k, self.mu_Y, self.rho_eff)


@dataclass(frozen=True)
class LmiSolution:
    P_star: np.ndarray
    beta_star: float
    mu_lmi: float
    theta: float
    iterations: int = 0
    converged: bool = True
    mu_k: float = 1.0
    mu_trace: tuple = field(default_factory=tuple)

    @property
    def lambda_min(self):
        return realrep.sym_eig(self.P_star).lambda_min

    @property
    def condition(self):
        ev = realrep.sym_eig(self.P_star).eigenvalues
        return float(ev[-1] / ev[0])


def certificate_slack(A, P, theta_val, beta):
    """Largest eigenvalue of A^T P + P A + Theta I + beta P (nonpositive when valid)."""
    n = A.shape[0]
    S = A.T @ P + P @ A + theta_val * np.eye(n) + beta * P
    return realrep.sym_eig(0.5 * (S + S.T)).lambda_max


def check_certificate(A, P, theta_val, beta, mu_k, tol=CERT_TOL):
    ev = realrep.sym_eig(0.5 * (P + P.T)).eigenvalues
    return (certificate_slack(A, P, theta_val, beta) <= tol
            and ev[0] >= 1.0 - tol and ev[-1] <= mu_k + tol)


def _psd_part(M):
    sd = realrep.sym_eig(0.5 * (M + M.T), vectors=True)
    lam = np.clip(sd.eigenvalues, 0.0, None)
    V = sd.eigenvectors
    return (V * lam) @ V.T


def _candidates(A, theta_val, beta):
    """Candidate certificates at a fixed beta.

    1. Identity plus correction: P = I + Y where Y solves the shifted Lyapunov
       equation driven by the positive part of Theta I + A + A^T + beta I.  This one
       is exact when A is diagonal.
    2. Rescaled Lyapunov solution: P1 solves (A + beta/2)^T P + P (A + beta/2) = -Theta I,
       scaled by max(1, 1/lambda_min) so that P >= I.
    """
    n = A.shape[0]
    eye = np.eye(n)
    Ab = A + 0.5 * beta * eye
    M = theta_val * eye + A + A.T + beta * eye
    out = [eye + lyap_solve(Ab, _psd_part(M))]
    if theta_val > 0.0:
        P1 = lyap_solve(Ab, theta_val * eye)
        lmin = realrep.sym_eig(P1).lambda_min
        if lmin > 0.0:
            out.append(max(1.0, 1.0 / lmin) * P1)
    return out


def _strictly_valid(A, P, theta_val, beta, mu_k):
    ev = realrep.sym_eig(0.5 * (P + P.T)).eigenvalues
    scale = max(1.0, realrep.op_norm(A) * ev[-1], theta_val)
    ok = (certificate_slack(A, P, theta_val, beta) <= SEARCH_TOL * scale
          and ev[0] >= 1.0 - SEARCH_TOL and ev[-1] <= mu_k * (1.0 + SEARCH_TOL))
    return ok, float(ev[-1])


def _feasible(A, theta_val, beta, mu_k):
    best = None
    best_lmax = math.inf
    for P in _candidates(A, theta_val, beta):
        ok, lmax = _strictly_valid(A, P, theta_val, beta, mu_k)
        if ok:
            if lmax < best_lmax * (1.0 - 1e-12):
                best, best_lmax = P, lmax
    return best


def _validate(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise PreconditionError(f"A must be square, got shape {A.shape}")
    alpha = decay_margin(A)
    if alpha <= 0.0:
        raise PreconditionError(f"symmetric part of A is not negative definite (alpha_s = {alpha:.3e})")
    return A, alpha


def solve_lmi(problem):
    """Largest feasible beta in (0, 2 alpha_s) and a certificate P at that beta."""
    A, alpha = _validate(problem.A_real)
    th = problem.theta
    mu_k = problem.mu_k
    lo, hi = 0.0, 2.0 * alpha
    P_lo = _feasible(A, th, lo, mu_k)
    if P_lo is None:
        limiting = "Theta >= 2 alpha_s" if th >= 2.0 * alpha else f"box P <= {mu_k} I"
        raise InfeasibleError(f"LMI infeasible for every beta in (0, {hi:.6g}); limiting constraint: "
                              f"{limiting}", limiting=limiting)
    for _ in range(BISECT_MAX):
        if hi - lo <= problem.tol * hi:
            break
        mid = 0.5 * (lo + hi)
        P = _feasible(A, th, mid, mu_k)
        if P is None:
            hi = mid
        else:
            lo, P_lo = mid, P
    if lo <= 0.0:
        raise InfeasibleError("LMI feasible only at beta = 0", limiting="decay rate")
    ev = realrep.sym_eig(P_lo).eigenvalues
    return LmiSolution(P_lo, lo, float(ev[-1]), th, 0, True, mu_k, (mu_k,))


def initial_mu(A_real):
    """mu_0 = 1 + ||A||_op."""
    return 1.0 + realrep.op_norm(np.asarray(A_real, dtype=float))


def iterate_lmi(problem, mu0=None):
    """Fixed-point iteration on the box parameter mu_k.

    After each solve the box is tightened to the condition number of the returned
    certificate, the smallest mu for which a rescaled copy of P fits between I and
    mu I.  The sequence is nonincreasing.  If a tightened box turns out infeasible,
    the previous certificate is returned with ``converged=False``.
    """
    mu = initial_mu(problem.A_real) if mu0 is None else float(mu0)
    sol = solve_lmi(replace(problem, mu_k=mu))
    trace = [mu]
    iterations = 0
    converged = False
    for _ in range(problem.max_iters):
        ev = realrep.sym_eig(sol.P_star).eigenvalues
        mu_next = max(1.0, float(ev[-1] / ev[0]))
        if abs(mu_next - mu) / mu < problem.mu_tol:
            converged = True
            break
        try:
            nxt = solve_lmi(replace(problem, mu_k=mu_next))
        except InfeasibleError:
            break
        mu, sol = mu_next, nxt
        trace.append(mu)
        iterations += 1
    return replace(sol, iterations=iterations, converged=converged, mu_k=mu, mu_trace=tuple(trace))


def c_infty(mu_star, w_max, ell, rho_eff, mu_Y):
    """C_inf = mu*^2 w^2 / (rho - mu_Y) + mu* ell^2 / mu_Y, and 0 when w = ell = 0."""
    if mu_star < 1.0:
        raise DomainError(f"mu_star must be >= 1, got {mu_star}")
    if w_max == 0.0 and ell == 0.0:
        return 0.0
    if not 0.0 < mu_Y < rho_eff:
        raise DomainError(f"mu_Y must lie in (0, rho_eff) = (0, {rho_eff}), got {mu_Y}")
    return mu_star ** 2 * w_max ** 2 / (rho_eff - mu_Y) + mu_star * ell ** 2 / mu_Y


class YoungParameter(NamedTuple):
    value: float
    clamped: bool


def mu_opt(mu_star, w_max, ell, rho_eff):
    """Stationary Young parameter rho sqrt(mu*) ell / (mu* w + sqrt(mu*) ell).

    Endpoint values (w = 0 gives rho, ell = 0 gives 0) leave the open interval and
    are flagged; the all-zero case falls back to rho/2.
    """
    r = math.sqrt(mu_star)
    den = mu_star * w_max + r * ell
    if den <= 0.0:
        return YoungParameter(rho_eff / 2.0, True)
    val = rho_eff * r * ell / den
    return YoungParameter(val, not 0.0 < val < rho_eff)


def kappa_infty(mu_star, c_chain, c_nc, eps_star, C2, rho_eff, mu_Y):
    """M0-free threshold mu*^2 (c C_nc e^2)^2 / (rho - mu_Y) + mu* (24 C2 e^2)^2 / mu_Y.

    ``c_chain`` is c_C c_B c_B+.  The O(M0) remainder is dropped.
    """
    w = c_chain * c_nc * eps_star ** 2
    ell = 24.0 * C2 * eps_star ** 2
    if w == 0.0 and ell == 0.0:
        return 0.0
    return c_infty(mu_star, w, ell, rho_eff, mu_Y)


def normal_closed_form(alpha_s, rho_eff, mu_k, mu_Y, dim=4):
    """P = I and beta = 2 alpha_s - Theta for normal A with decay margin alpha_s."""
    if alpha_s <= 0:
        raise DomainError("alpha_s must be positive")
    th = 0.0 if rho_eff == 0.0 else theta(mu_k, mu_Y, rho_eff)
    beta = 2.0 * alpha_s - th
    if beta <= 0.0:
        raise InfeasibleError(f"Theta = {th:.6g} >= 2 alpha_s = {2 * alpha_s:.6g}", limiting="Theta >= 2 alpha_s")
    return LmiSolution(np.eye(dim), beta, 1.0, th, 0, True, mu_k, (mu_k,))


@dataclass(frozen=True)
class MonotonicityReport:
    mu_values: tuple
    lambda_max: tuple
    errors: tuple
    non_increasing: bool


def monotonicity_check(A_real, rho_eff, mu_Y, mu_grid, tol=1e-9):
    """Solve the LMI at every grid value (descending) and test lambda_max(P*) is nonincreasing."""
    grid = [float(m) for m in mu_grid]
    if any(m < 1.0 for m in grid) or any(b > a for a, b in zip(grid, grid[1:])):
        raise PreconditionError("mu grid must be sorted descending with all values >= 1")
    lmax, errs = [], []
    for mu in grid:
        try:
            sol = solve_lmi(LmiProblem(np.asarray(A_real, dtype=float), rho_eff, mu_Y, mu))
            lmax.append(sol.mu_lmi)
            errs.append(None)
        except InfeasibleError as exc:
            lmax.append(None)
            errs.append(str(exc))
    vals = [v for v in lmax if v is not None]
    # along a descending mu grid the certificate's lambda_max must not grow
    ok = all(b <= a + tol for a, b in zip(vals, vals[1:]))
    return MonotonicityReport(tuple(grid), tuple(lmax), tuple(errs), ok)
