"""Projected Jacobi defect, its closed-form bound bundle, and an empirical check of
the generalized one-sided Lipschitz (GOSL) inequality.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import quat, realrep
from ._sampling import chunk_rng
from .bracket import compile_bracket, jacobiator
from .errors import ConfigError, DomainError, PreconditionError

GOSL_SLACK = 1e-10
BATCH = 16


@dataclass(frozen=True)
class SelectionGrid:
    """Candidate set for each selection slot: ``shells x directions`` points on
    concentric spheres of the eps*-ball plus the origin, combined as a full product,
    followed by ``random_pairs`` jointly random pairs drawn inside the ball."""

    shells: int = 3
    directions: int = 64
    random_pairs: int = 256
    seed: int = 0


CERTIFICATION_GRID = SelectionGrid()
ONLINE_GRID = SelectionGrid(shells=2, directions=8, random_pairs=0)


@lru_cache(maxsize=32)
def _candidates(n, eps_star, grid):
    if grid.shells <= 0 and grid.random_pairs <= 0:
        raise ConfigError("selection grid is empty")
    rng = chunk_rng(grid.seed, 7)
    slot = [np.zeros((1, n, 4))]
    if grid.shells > 0 and grid.directions > 0:
        dirs = quat.random_hvectors(rng, grid.directions, n)
        for k in range(1, grid.shells + 1):
            slot.append(eps_star * k / grid.shells * dirs)
    slot = np.concatenate(slot).reshape(-1, 4 * n)
    pairs = np.zeros((0, 2, 4 * n))
    if grid.random_pairs > 0:
        d = quat.random_hvectors(rng, 2 * grid.random_pairs, n).reshape(grid.random_pairs, 2, 4 * n)
        r = eps_star * rng.random((grid.random_pairs, 2, 1)) ** (1.0 / (4 * n))
        pairs = d * r
    return slot, pairs


@dataclass(frozen=True)
class DefectSelection:
    xi1: np.ndarray
    xi2: np.ndarray
    value: np.ndarray
    magnitude: float


def _expansion(spec, P, X, t):
    """Coefficients of (xi1, xi2) -> P J(x, x + xi1, x + xi2) for a batch of states.

    The map is affine-bilinear because J is trilinear, so it equals
    c + U xi1 + V xi2 + T(xi1, xi2) with everything read off basis evaluations.
    """
    N, n, _ = X.shape
    d = 4 * n
    E = np.broadcast_to(np.eye(d).reshape(1, d, n, 4), (N, d, n, 4))
    Xd = np.broadcast_to(X[:, None], (N, d, n, 4))
    T2 = d * d
    Ei = np.broadcast_to(np.eye(d).reshape(1, d, 1, n, 4), (N, d, d, n, 4)).reshape(N, T2, n, 4)
    Ej = np.broadcast_to(np.eye(d).reshape(1, 1, d, n, 4), (N, d, d, n, 4)).reshape(N, T2, n, 4)
    # one batched call: slots for c, U, V, T stacked along axis 1
    second = np.concatenate([X[:, None], E, Xd, Ei], axis=1)
    third = np.concatenate([X[:, None], Xd, E, Ej], axis=1)
    first = np.broadcast_to(X[:, None], second.shape)
    J = jacobiator(spec, first, second, third, t).reshape(N, -1, d)
    J = J @ P.T
    c = J[:, 0]
    U = J[:, 1:1 + d]
    V = J[:, 1 + d:1 + 2 * d]
    T = J[:, 1 + 2 * d:].reshape(N, d, d, d)
    return c, U, V, T


def defect_many(spec, B, X, t=0.0, eps_star=0.3125, grid=CERTIFICATION_GRID, proj=None):
    """Vectorized ``defect`` over a batch of states ``X`` of shape (N, n, 4).

    Returns ``(values, magnitudes, xi1, xi2)`` with ``values`` of shape (N, n, 4).
    ``proj`` may carry a precomputed real projector onto Im(B).
    """
    if eps_star <= 0:
        raise DomainError("eps_star must be positive")
    X = np.asarray(X, dtype=float)
    N, n, _ = X.shape
    d = 4 * n
    P = realrep.projector(B) if proj is None else proj
    slot, pairs = _candidates(n, float(eps_star), grid)
    vals = np.empty((N, d))
    mags = np.empty(N)
    xi1 = np.empty((N, d))
    xi2 = np.empty((N, d))
    for s in range(0, N, BATCH):
        Xs = X[s:s + BATCH]
        c, U, V, T = _expansion(spec, P, Xs, t)
        b = Xs.shape[0]
        S = slot.shape[0]
        a1 = slot @ U  # (b, S, d): contribution of xi1 candidates
        a2 = slot @ V
        # full product grid then the joint random pairs
        Tg = (slot @ T.reshape(b, d, d * d)).reshape(b, S, d, d)  # contract xi1
        # contract xi2 in one GEMM; layout (b, i, out, j)
        G = (Tg.transpose(0, 1, 3, 2).reshape(b * S * d, d) @ slot.T).reshape(b, S, d, S)
        G += (c[:, None, :] + a1)[:, :, :, None]
        G += a2.transpose(0, 2, 1)[:, None, :, :]
        norms = np.sqrt(np.einsum("bidj,bidj->bij", G, G)).reshape(b, S * S)
        pv = None
        if len(pairs):
            p1, p2 = pairs[:, 0], pairs[:, 1]
            pv = (c[:, None, :] + p1 @ U + p2 @ V + np.einsum("pa,pk,bakd->bpd", p1, p2, T))
            norms = np.concatenate([norms, np.sqrt(np.einsum("bpd,bpd->bp", pv, pv))], axis=1)
        k = np.argmax(norms, axis=1)
        for r in range(b):
            kk = int(k[r])
            if kk < S * S:
                i, j = divmod(kk, S)
                x1, x2 = slot[i], slot[j]
                vals[s + r] = G[r, i, :, j]
            else:
                x1, x2 = pairs[kk - S * S]
                vals[s + r] = pv[r, kk - S * S]
            mags[s + r] = norms[r, kk]
            xi1[s + r] = x1
            xi2[s + r] = x2
    return vals.reshape(N, n, 4), mags, xi1.reshape(N, n, 4), xi2.reshape(N, n, 4)


def defect(spec, B, x, t=0.0, eps_star=0.3125, grid=CERTIFICATION_GRID, proj=None):
    """Worst-case projected Jacobiator over selections in the closed eps*-ball.

    The reported magnitude is a lower estimate of the true maximum; every safety
    constant uses the closed-form upper bounds in ``gosl_constants`` instead.
    """
    x = quat.as_hvector(x)
    v, m, a, b = defect_many(spec, B, x[None], t, eps_star, grid, proj)
    return DefectSelection(a[0], b[0], v[0], float(m[0]))


@dataclass(frozen=True)
class GoslConstants:
    M0: float
    eps_star: float
    C2: float
    c_nc: float
    deltabar_max: float
    rho_delta: float
    rho_tight: float
    ell_tight: float
    r_max: float
    rho_tight_small: Optional[float] = None
    ell_tight_small: Optional[float] = None


def gosl_constants(C2, c_nc, M0, eps_star):
    """Closed-form defect bounds on the M0-ball.

    deltabar_max = 6 C2 M (M + e)^2, rho_delta = 6 C2 (M + e)(3M + e),
    rho_tight = 2 rho_delta, ell_tight = 4 deltabar_max, r_max = C_nc M (M + e)^2.
    """
    if M0 <= 0 or eps_star <= 0:
        raise DomainError(f"M0 and eps_star must be positive (got {M0}, {eps_star})")
    if C2 < 0 or c_nc < 0:
        raise DomainError("C2 and c_nc must be nonnegative")
    M, e = float(M0), float(eps_star)
    deltabar = 6.0 * C2 * M * (M + e) ** 2
    rho = 6.0 * C2 * (M + e) * (3.0 * M + e)
    small = M <= e / 10.0
    return GoslConstants(
        M0=M,
        eps_star=e,
        C2=float(C2),
        c_nc=float(c_nc),
        deltabar_max=deltabar,
        rho_delta=rho,
        rho_tight=2.0 * rho,
        ell_tight=4.0 * deltabar,
        r_max=c_nc * M * (M + e) ** 2,
        rho_tight_small=12.0 * C2 * e * e if small else None,
        ell_tight_small=24.0 * C2 * M * e * e if small else None,
    )


@dataclass(frozen=True)
class GoslReport:
    violations: int
    pairs: int
    max_slack: float
    max_lhs: float
    max_defect: float


def _ball_points(rng, count, n, radius):
    d = quat.random_hvectors(rng, count, n)
    r = radius * rng.random(count) ** (1.0 / (4 * n))
    return d * r[:, None, None]


def verify_gosl(spec, B, constants, pairs=10_000, seed=0, t=0.0, grid=CERTIFICATION_GRID):
    """Count violations of <d(x) - d(z), x - z> <= rho ||h||^2 + ell ||h|| + 1e-10.

    ``max_slack`` is the largest value of left side minus right side (negative when
    the inequality holds with room).
    """
    if pairs < 100:
        raise PreconditionError("verify_gosl needs at least 100 pairs")
    B = quat.as_hmatrix(B)
    n = B.shape[0]
    spec = compile_bracket(spec, t)
    rng = chunk_rng(seed, 0)
    X = _ball_points(rng, pairs, n, constants.M0)
    Z = _ball_points(rng, pairs, n, constants.M0)
    dx, mx, _, _ = defect_many(spec, B, X, t, constants.eps_star, grid)
    dz, mz, _, _ = defect_many(spec, B, Z, t, constants.eps_star, grid)
    h = X - Z
    lhs = quat.inner_re(dx - dz, h)
    hn = quat.norm(h)
    rhs = constants.rho_tight * hn * hn + constants.ell_tight * hn
    slack = lhs - rhs
    return GoslReport(
        violations=int(np.sum(slack > GOSL_SLACK)),
        pairs=pairs,
        max_slack=float(slack.max()),
        max_lhs=float(lhs.max()),
        max_defect=float(max(mx.max(), mz.max())),
    )
