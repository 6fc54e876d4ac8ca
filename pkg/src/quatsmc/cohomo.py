"""Localized Chevalley-Eilenberg cochains for a quasi-Lie bracket.

Covers the degree-2 to degree-3 coboundary, the cone substitution, the finite-rank
correction ``omega0``, the residual ``R0 = J - d omega0`` with its constant, localized
cochain norms, and the matching check against the actuator range.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import quat, realrep
from ._sampling import hill_climb, sampled_sup
from .bracket import jacobiator
from .errors import PreconditionError

CMC_TOL = 1e-9
CMC_SAMPLES = 512
ROUNDOFF_FLOOR = 1e-12


@dataclass(frozen=True)
class Cochain:
    degree: int
    evaluator: Callable[..., np.ndarray]
    epsilon: float = np.inf
    name: str = ""

    def __call__(self, *args):
        if len(args) != self.degree:
            raise PreconditionError(f"{self.name or 'cochain'} takes {self.degree} arguments")
        args = [np.asarray(a, dtype=float) for a in args]
        if any(a.ndim == 2 and not np.any(a) for a in args):
            return np.zeros(np.broadcast_shapes(*(a.shape for a in args)))
        return self.evaluator(*args)

    def scaled(self, c):
        ev = self.evaluator
        return Cochain(self.degree, lambda *a: c * ev(*a), self.epsilon, f"{c}*{self.name}")


def zero_cochain(degree, epsilon=np.inf):
    return Cochain(degree, lambda *a: np.zeros(np.broadcast_shapes(*(x.shape for x in a))),
                   epsilon, "zero")


def ce_differential(spec, omega, t=0.0):
    """Coboundary of a degree-2 cochain.

    d omega(x0, x1, x2) = L(x0, w(x1, x2)) - L(x1, w(x0, x2)) + L(x2, w(x0, x1))
                        + w(L(x0, x1), x2) - w(L(x0, x2), x1) + w(L(x1, x2), x0)
    """
    if omega.degree != 2:
        raise PreconditionError(f"ce_differential expects a degree-2 cochain, got {omega.degree}")
    w = omega.evaluator

    def d(x0, x1, x2):
        if not x0.shape == x1.shape == x2.shape:
            shape = np.broadcast_shapes(x0.shape, x1.shape, x2.shape)
            x0, x1, x2 = (np.broadcast_to(a, shape) for a in (x0, x1, x2))
        # the six terms in four stacked evaluations
        inner = w(np.stack([x1, x0, x0]), np.stack([x2, x2, x1]))
        outer = spec(np.stack([x0, x1, x2]), inner, t)
        pairs = spec(np.stack([x0, x0, x1]), np.stack([x1, x2, x2]), t)
        back = w(pairs, np.stack([x2, x1, x0]))
        return outer[0] - outer[1] + outer[2] + back[0] - back[1] + back[2]

    return Cochain(3, d, omega.epsilon, f"d({omega.name})")


def jacobi_cochain(spec, t=0.0, epsilon=np.inf):
    return Cochain(3, lambda x, y, z: jacobiator(spec, x, y, z, t), epsilon, "jacobiator")


def pi_cone(psi):
    """Third-slot substitution (x, y, z) -> psi(x, y, x + y)."""
    ev = psi.evaluator
    return Cochain(3, lambda x, y, z: ev(x, y, x + y), psi.epsilon, f"cone({psi.name})")


def omega0(spec, x, y, t=0.0, eps_star=None):
    """Finite-rank correction (1/3) J(x, y, x + y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if eps_star is not None and (np.any(quat.norm(x) > eps_star) or np.any(quat.norm(y) > eps_star)):
        warnings.warn("omega0 evaluated outside the admissible ball", RuntimeWarning, stacklevel=2)
    if x.ndim == 2 and (not np.any(x) or not np.any(y)):
        return np.zeros_like(x)
    return jacobiator(spec, x, y, x + y, t) / 3.0


def omega0_cochain(spec, eps_star, t=0.0):
    return Cochain(2, lambda x, y: jacobiator(spec, x, y, x + y, t) / 3.0, eps_star, "omega0")


def d_omega0(spec, eps_star=np.inf, t=0.0):
    return ce_differential(spec, omega0_cochain(spec, eps_star, t), t)


def residual_r0(spec, x, y, z, t=0.0):
    """R0 = J - d omega0."""
    dw = d_omega0(spec, t=t)
    return jacobiator(spec, x, y, z, t) - dw(x, y, z)


def _ball_draw(n, k, eps):
    def draw(rng, count):
        return tuple(eps * quat.random_hvectors(rng, count, n) for _ in range(k))
    return draw


def _ratio(omega, eps):
    def score(*args):
        args = [eps * a for a in args]
        den = np.ones(np.shape(args[0])[:-2])
        for a in args:
            den = den * quat.norm(a)
        return quat.norm(omega.evaluator(*args)) / den
    return score


def cochain_norm(omega, n, samples=10_000, seed=0, workers=1, refine=True):
    """Lower estimate of the localized norm sup ||w(x_1..x_k)|| / prod ||x_i||.

    Points are sampled on the product of eps-spheres; for cochains homogeneous of
    degree >= k the ratio is nondecreasing in each radius, so the boundary carries
    the sup over the ball.
    """
    if samples < 1000:
        raise PreconditionError("cochain_norm needs at least 1000 samples")
    eps = omega.epsilon if np.isfinite(omega.epsilon) else 1.0
    unit = _ratio(omega, eps)
    draw = _ball_draw(n, omega.degree, 1.0)
    best, args = sampled_sup(draw, unit, samples, seed, workers)
    if refine and best > 0.0:
        best, _ = hill_climb(unit, args)
    return best


def omega0_ceiling(C2, eps_star):
    """Closed-form bound 8 C2 eps* on the localized norm of omega0."""
    return 8.0 * C2 * eps_star


@dataclass(frozen=True)
class CncBundle:
    omega_op: float
    cnc: float
    structural_bound: float
    bookkeeping_bound: float


def cnc_bundle(C2, eps_star, omega_op=None):
    """Residual constant, the smaller of 12 C2 and 3 ||omega0|| + 6 C2.

    ``omega_op`` defaults to the closed-form ceiling, since a sampled norm is only a
    lower estimate and cannot certify an upper bound.
    """
    w = omega0_ceiling(C2, eps_star) if omega_op is None else float(omega_op)
    structural = 12.0 * C2
    bookkeeping = 3.0 * w + 6.0 * C2
    return CncBundle(w, min(structural, bookkeeping), structural, bookkeeping)


@dataclass(frozen=True)
class CmcReport:
    passed: bool
    max_residual: float
    max_relative_residual: float
    coboundary_residual: float
    defect_residual: float
    cone_discrepancy: float
    samples: int
    tol: float


def cmc_check(spec, B, eps_star, samples=CMC_SAMPLES, seed=0, tol=CMC_TOL, t=0.0):
    """Check that evaluated coboundaries land in Im(B).

    The generating family holds d omega0 and the Jacobi defect itself at seeded
    triplets in the eps*-ball.  For an exactly antisymmetric bracket the Jacobiator
    is alternating, so omega0 and hence d omega0 vanish identically; the defect
    values are what carry the information in that case.  A residual passes when it is
    at most ``tol * ||e||`` plus an absolute floor of ``ROUNDOFF_FLOOR`` times the
    largest family value.
    """
    B = quat.as_hmatrix(B)
    P = realrep.projector(B)
    n = B.shape[0]
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0])))
    trip = []
    for _ in range(3):
        dirs = quat.random_hvectors(rng, samples, n)
        radii = eps_star * rng.random(samples) ** (1.0 / (4 * n))
        trip.append(dirs * radii[:, None, None])
    x, y, z = trip
    dw = d_omega0(spec, eps_star, t)(x, y, z)
    psi = jacobiator(spec, x, y, z, t)
    cone = pi_cone(jacobi_cochain(spec, t))(x, y, z)

    def residuals(vals):
        flat = vals.reshape(samples, -1)
        res = np.linalg.norm(flat - flat @ P.T, axis=1)
        return res, np.linalg.norm(flat, axis=1)

    r_dw, n_dw = residuals(dw)
    r_psi, n_psi = residuals(psi)
    res = np.concatenate([r_dw, r_psi])
    mag = np.concatenate([n_dw, n_psi])
    # values at roundoff level relative to the family scale carry no direction
    floor = ROUNDOFF_FLOOR * float(mag.max(initial=0.0))
    rel = np.where(mag > floor, res / np.where(mag > 0, mag, 1.0), 0.0)
    passed = bool(np.all(res <= tol * mag + floor))
    return CmcReport(
        passed=passed,
        max_residual=float(res.max()),
        max_relative_residual=float(rel.max()),
        coboundary_residual=float(r_dw.max()),
        defect_residual=float(r_psi.max()),
        cone_discrepancy=float(quat.norm(dw - cone).max()),
        samples=samples,
        tol=tol,
    )
