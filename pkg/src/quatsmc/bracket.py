"""Quasi-Lie brackets on H^n, their Jacobiator, and the defect constants.

An evaluator is a real-bilinear map ``f(x, y, t)`` on arrays of shape ``(..., n, 4)``.
The constants are

* ``A``: bilinear bound, ``||L(x, y)|| <= A ||x|| ||y||``;
* ``C1``: antisymmetry defect, ``||L(x, y) + L(y, x)|| <= C1 ||x|| ||y|| (||x|| + ||y||)``;
* ``C2``: Jacobiator constant, ``||J(x, y, z)|| <= 6 C2 ||x|| ||y|| ||z||``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import quat
from ._sampling import hill_climb, sampled_sup
from .errors import DomainError, PreconditionError

Evaluator = Callable[[np.ndarray, np.ndarray, float], np.ndarray]

HILL_STEPS = 100


@dataclass(frozen=True)
class BracketSpec:
    evaluator: Evaluator
    n: int
    antisymmetric: bool = False
    eps_b: Optional[float] = None
    epsilon0: float = 0.5
    kind: str = "custom"
    options: dict = field(default_factory=dict)
    time_invariant: bool = True
    jacobi: Optional[Callable] = None

    def __call__(self, x, y, t=0.0):
        return self.evaluator(np.asarray(x, dtype=float), np.asarray(y, dtype=float), t)


def _imag_pair(x, y, eps_b):
    xy = quat.mul(quat.conj(x), y)
    return eps_b * (xy - quat.conj(xy))


def test_bracket(eps_b=0.1, epsilon0=0.5, n=1):
    """Componentwise eps_b * (conj(x) y - conj(y) x); exactly antisymmetric, not Lie."""

    def f(x, y, t=0.0):
        return _imag_pair(x, y, eps_b)

    return BracketSpec(f, n, antisymmetric=True, eps_b=eps_b, epsilon0=epsilon0, kind="test")


def coordinate_bracket(n, index, eps_b=0.1, epsilon0=0.5):
    """The test bracket acting on a single coordinate, zero on all others."""
    if not 0 <= index < n:
        raise DomainError(f"coordinate index {index} outside 0..{n - 1}")

    def f(x, y, t=0.0):
        out = np.zeros(np.broadcast_shapes(x.shape, y.shape))
        out[..., index, :] = _imag_pair(x[..., index, :], y[..., index, :], eps_b)
        return out

    return BracketSpec(f, n, antisymmetric=True, eps_b=eps_b, epsilon0=epsilon0,
                       kind="coordinate", options={"index": index})


def commutator_bracket(n=1, scale=1.0, epsilon0=0.5):
    """Componentwise scale * (xy - yx); an exact Lie bracket."""

    def f(x, y, t=0.0):
        return scale * (quat.mul(x, y) - quat.mul(y, x))

    return BracketSpec(f, n, antisymmetric=True, epsilon0=epsilon0, kind="commutator",
                       options={"scale": scale})


def zero_bracket(n=1, epsilon0=0.5):
    def f(x, y, t=0.0):
        return np.zeros(np.broadcast_shapes(x.shape, y.shape))

    return BracketSpec(f, n, antisymmetric=True, epsilon0=epsilon0, kind="zero")


def eval_bracket(spec, x, y, t=0.0):
    return spec(x, y, t)


def jacobiator(spec, x, y, z, t=0.0):
    """Cyclic sum L(x, L(y, z)) + L(y, L(z, x)) + L(z, L(x, y))."""
    x, y, z = (np.asarray(a, dtype=float) for a in (x, y, z))
    if spec.jacobi is not None:
        return spec.jacobi(x, y, z, t)
    return spec(x, spec(y, z, t), t) + spec(y, spec(z, x, t), t) + spec(z, spec(x, y, t), t)


def bracket_tensor(spec, t=0.0):
    """Real coefficients with L(x, y)_k = sum_ab W[a, b, k] x_a y_b, shape (d, d, d)."""
    d = 4 * spec.n
    E = np.eye(d).reshape(d, spec.n, 4)
    return spec(E[:, None], E[None, :], t).reshape(d, d, d)


def jacobi_tensor(spec, t=0.0):
    """Real coefficients of the Jacobiator, shape (d, d, d, d)."""
    d = 4 * spec.n
    E = np.eye(d).reshape(d, spec.n, 4)
    return jacobiator(spec, E[:, None, None], E[None, :, None], E[None, None, :], t).reshape(d, d, d, d)


def _contract(W, args):
    """Contract the leading axes of W with the flattened argument vectors in order."""
    shape = args[0].shape
    if any(a.shape != shape for a in args[1:]):
        shape = np.broadcast_shapes(*(a.shape for a in args))
        args = [a if a.shape == shape else np.broadcast_to(a, shape) for a in args]
    lead, d = shape[:-2], shape[-2] * shape[-1]
    flat = [a.reshape(lead + (d,)) for a in args]
    acc = flat[0] @ W.reshape(d, -1)
    for v in flat[1:]:
        acc = (v[..., None, :] @ acc.reshape(lead + (d, -1)))[..., 0, :]
    return acc.reshape(shape)


def compile_bracket(spec, t=0.0):
    """Equivalent spec evaluated through precomputed coefficient tensors.

    Valid because evaluators are bilinear; a time-varying bracket is returned as is.
    """
    if not spec.time_invariant:
        return spec
    W = bracket_tensor(spec, t)
    Jt = jacobi_tensor(spec, t)
    return BracketSpec(
        lambda x, y, t=0.0: _contract(W, (x, y)), spec.n, spec.antisymmetric, spec.eps_b,
        spec.epsilon0, spec.kind, dict(spec.options, compiled=True), True,
        lambda x, y, z, t=0.0: _contract(Jt, (x, y, z)))


def _unit_draw(n, k):
    def draw(rng, count):
        return tuple(quat.random_hvectors(rng, count, n) for _ in range(k))
    return draw


def _bilinear_ratio(spec):
    def score(x, y):
        return quat.norm(spec(x, y)) / (quat.norm(x) * quat.norm(y))
    return score


def _jacobi_ratio(spec):
    def score(x, y, z):
        return quat.norm(jacobiator(spec, x, y, z)) / (quat.norm(x) * quat.norm(y) * quat.norm(z))
    return score


def _nested_ratio(spec):
    def score(x, y, z):
        return quat.norm(spec(x, spec(y, z))) / (quat.norm(x) * quat.norm(y) * quat.norm(z))
    return score


def _sup(score, n, k, samples, seed, workers, refine):
    best, args = sampled_sup(_unit_draw(n, k), score, samples, seed, workers)
    if refine and best > 0.0:
        best, _ = hill_climb(score, args, steps=HILL_STEPS)
    return best


def estimate_A(spec, samples=50_000, seed=0, workers=1, refine=True):
    """Lower estimate of sup ||L(x, y)|| / (||x|| ||y||)."""
    if samples < 1000:
        raise PreconditionError("estimate_A needs at least 1000 samples")
    return _sup(_bilinear_ratio(spec), spec.n, 2, samples, seed, workers, refine)


def estimate_C2(spec, samples=50_000, seed=0, workers=1, refine=True):
    """Lower estimate of C2, a sixth of sup ||J(x, y, z)|| / (||x|| ||y|| ||z||)."""
    if samples < 10_000:
        raise PreconditionError("estimate_C2 needs at least 10^4 samples")
    return _sup(_jacobi_ratio(spec), spec.n, 3, samples, seed, workers, refine) / 6.0


def estimate_C1(spec, samples=50_000, seed=0, workers=1, refine=True):
    """Antisymmetry-defect constant; zero by definition for flagged brackets.

    The ratio is evaluated on unit pairs, where ||x|| + ||y|| = 2.
    """
    if spec.antisymmetric:
        return 0.0

    def score(x, y):
        d = quat.norm(spec(x, y) + spec(y, x))
        nx, ny = quat.norm(x), quat.norm(y)
        return d / (nx * ny * (nx + ny))

    return _sup(score, spec.n, 2, samples, seed, workers, refine)


def estimate_bracket_squared(spec, samples=50_000, seed=0, workers=1, refine=True):
    """sup ||L(x, L(y, z))|| / (||x|| ||y|| ||z||); diagnostic only, never enters the radius."""
    return _sup(_nested_ratio(spec), spec.n, 3, samples, seed, workers, refine)


def analytic_ceilings(spec):
    """Closed-form values known for the test bracket family, else an empty dict."""
    if spec.kind in ("test", "coordinate") and spec.eps_b is not None:
        e = spec.eps_b
        return {"A": 2.0 * e, "six_C2_ceiling": 8.0 * e * e, "bracket_squared": 4.0 * e * e}
    if spec.kind == "zero":
        return {"A": 0.0, "six_C2_ceiling": 0.0, "bracket_squared": 0.0}
    return {}


def _inv(x, scale):
    return math.inf if x == 0.0 else 1.0 / (scale * x)


def _radius(A, C1, C2, eps0, antisymmetric):
    if antisymmetric:
        terms = [_inv(A, 8.0), _inv(C2, 4.0), eps0]
    else:
        c1_term = math.inf if C1 == 0.0 else math.sqrt(1.0 / (16.0 * C1))
        terms = [_inv(A, 16.0), c1_term, _inv(C2, 4.0), eps0]
    return min(terms)


def admissible_radius(A, C1, C2, eps0, antisymmetric=False):
    """Admissible radius for the rigidity construction.

    Generic form ``min{1/(16A), sqrt(1/(16 C1)), 1/(4 C2), eps0}`` with the square
    root read as +inf at C1 = 0; the antisymmetric form is ``min{1/(8A), 1/(4 C2), eps0}``.
    """
    if A <= 0 or C2 <= 0 or eps0 <= 0:
        raise DomainError(f"admissible_radius needs A, C2, eps0 > 0 (got {A}, {C2}, {eps0})")
    if C1 < 0:
        raise DomainError(f"C1 must be nonnegative, got {C1}")
    return _radius(A, C1, C2, eps0, antisymmetric)


@dataclass(frozen=True)
class BracketConstants:
    A: float
    C1: float
    C2: float
    eps_star_generic: float
    eps_star_antisym: float
    bracket_squared: Optional[float] = None

    @property
    def eps_star(self):
        return self.eps_star_generic


def bracket_constants(spec, samples=50_000, seed=0, workers=1, diagnostics=False):
    A = estimate_A(spec, samples, seed, workers)
    C1 = estimate_C1(spec, samples, seed + 1, workers)
    C2 = estimate_C2(spec, samples, seed + 2, workers)
    sq = estimate_bracket_squared(spec, samples, seed + 3, workers) if diagnostics else None
    return BracketConstants(
        A=A,
        C1=C1,
        C2=C2,
        eps_star_generic=_radius(A, C1, C2, spec.epsilon0, False),
        eps_star_antisym=_radius(A, C1, C2, spec.epsilon0, True) if spec.antisymmetric else
        _radius(A, C1, C2, spec.epsilon0, False),
        bracket_squared=sq,
    )


def constants_from_values(A, C1, C2, eps0, antisymmetric=True):
    """Build a constants record from known values instead of sampling."""
    return BracketConstants(A, C1, C2, _radius(A, C1, C2, eps0, False),
                            _radius(A, C1, C2, eps0, antisymmetric))
