"""Real representation of quaternion vectors and matrices, plus the dense linear
algebra the controller needs (symmetric eigensolver, singular values,
pseudo-inverse, range projection and operator norms).

Layout: entry ``x_i`` of a quaternion vector occupies real slots ``4i .. 4i+3``.
A quaternion ``q`` acts by left multiplication through the 4x4 block ``phi_quat(q)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quat
from .errors import DimensionError, PreconditionError, SingularityError

RANK_TOL = 1e-10
SYM_TOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 60

_D4 = np.diag([1.0, -1.0, -1.0, -1.0])


def phi_quat(q):
    """4x4 real matrix of left multiplication by q; broadcasts over leading axes."""
    q = np.asarray(q, dtype=float)
    a, b, c, d = np.moveaxis(q, -1, 0)
    rows = [
        [a, -b, -c, -d],
        [b, a, -d, c],
        [c, d, a, -b],
        [d, -c, b, a],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def phi_vec(x):
    x = quat.as_hvector(x)
    return x.reshape(-1).copy()


def phi_inv_vec(v):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size % 4:
        raise DimensionError(f"real vector length {v.size} is not divisible by 4")
    return v.reshape(-1, 4).copy()


def phi_mat(A):
    """Block real representation of an ``(n, m, 4)`` quaternion matrix, shape (4n, 4m)."""
    A = quat.as_hmatrix(A)
    n, m = A.shape[:2]
    blocks = phi_quat(A)  # (n, m, 4, 4)
    return blocks.transpose(0, 2, 1, 3).reshape(4 * n, 4 * m)


def phi_inv_mat(M):
    """Inverse of ``phi_mat`` on its image (reads the first column of each block)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] % 4 or M.shape[1] % 4:
        raise DimensionError(f"real matrix shape {M.shape} is not a 4x4 block grid")
    n, m = M.shape[0] // 4, M.shape[1] // 4
    blocks = M.reshape(n, 4, m, 4).transpose(0, 2, 1, 3)
    return blocks[..., :, 0].copy()


def conj_signs(n):
    """Real matrix of componentwise conjugation on H^n."""
    return np.kron(np.eye(n), _D4)


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    sweeps: int = 0

    @property
    def lambda_min(self):
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self):
        return float(self.eigenvalues[-1])


def _round_robin(n):
    """Disjoint index pairings covering every pair once per sweep (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        rounds.append([(min(players[i], players[n - 1 - i]), max(players[i], players[n - 1 - i]))
                       for i in range(n // 2)])
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def sym_eig(S, vectors=False, tol=JACOBI_TOL):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Rotations on disjoint index pairs commute, so each round applies n/2 of them in
    one orthogonal similarity.  Sweeps stop once the off-diagonal Frobenius norm
    drops below ``tol * ||S||_F``.  Eigenvalues are returned ascending.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"sym_eig needs a square matrix, got shape {S.shape}")
    scale = np.linalg.norm(S)
    if np.max(np.abs(S - S.T), initial=0.0) > SYM_TOL * max(scale, 1.0):
        raise PreconditionError("sym_eig: input is not symmetric")
    n0 = S.shape[0]
    if n0 == 0:
        return SpectralData(np.zeros(0), np.zeros((0, 0)) if vectors else None)
    n = n0 + (n0 % 2)
    a = np.zeros((n, n))
    a[:n0, :n0] = 0.5 * (S + S.T)
    v = np.eye(n)
    rounds = [np.array(r).T for r in _round_robin(n)] if n > 1 else []
    threshold = tol * scale
    offmask = ~np.eye(n, dtype=bool)
    sweeps = 0
    while sweeps < JACOBI_MAX_SWEEPS:
        off = np.sqrt(np.sum(a[offmask] ** 2))
        if off <= threshold:
            break
        sweeps += 1
        for p, q in rounds:
            apq = a[p, q]
            active = apq != 0.0
            if not np.any(active):
                continue
            theta = np.where(active, (a[q, q] - a[p, p]) / np.where(active, 2.0 * apq, 1.0), 0.0)
            t = np.where(active, np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0)), 0.0)
            t = np.where(active & (theta == 0.0), 1.0, t)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            rot = np.eye(n)
            rot[p, p] = c
            rot[q, q] = c
            rot[p, q] = s
            rot[q, p] = -s
            a = rot.T @ a @ rot
            a[p, q] = 0.0
            a[q, p] = 0.0
            v = v @ rot
    # a padding index has a zero row, so its rotations are inactive and it stays decoupled
    d = np.diag(a)[:n0]
    v = v[:n0, :n0]
    order = np.argsort(d, kind="stable")
    return SpectralData(d[order].copy(), v[:, order].copy() if vectors else None, sweeps)


def eig_extremes(S):
    ev = sym_eig(S).eigenvalues
    return float(ev[0]), float(ev[-1])


def singular_values(A):
    """Singular values, descending, from the eigenvalues of A^T A."""
    A = np.asarray(A, dtype=float)
    ev = sym_eig(A.T @ A).eigenvalues
    return np.sqrt(np.clip(ev[::-1], 0.0, None))


def op_norm(A):
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(singular_values(A)[0])


def pinv(B_real):
    """Left pseudo-inverse (B^T B)^{-1} B^T of a full-column-rank real matrix.

    Returns ``(B_plus, c_B_plus)`` with ``c_B_plus = 1 / sigma_min``.
    """
    B = np.asarray(B_real, dtype=float)
    sv = singular_values(B)
    smax, smin = float(sv[0]), float(sv[-1])
    if smin <= RANK_TOL or smin <= RANK_TOL * smax:
        raise SingularityError(f"matrix is rank deficient: sigma_min = {smin:.3e}", sigma_min=smin)
    B_plus = np.linalg.solve(B.T @ B, B.T)
    return B_plus, 1.0 / smin


def projector(B):
    """Real orthogonal projector onto the range of a quaternion matrix B."""
    B_real = phi_mat(B)
    B_plus, _ = pinv(B_real)
    return B_real @ B_plus


def proj_im_b(B, x):
    P = projector(B)
    return phi_inv_vec(P @ phi_vec(x))


class ConjugatedOperator:
    """The map y -> conj(T conj(y)) for a quaternion matrix T."""

    def __init__(self, T):
        self.T = quat.as_hmatrix(T)

    @property
    def shape(self):
        return self.T.shape[:2]

    def __call__(self, y):
        y = quat.as_hvector(y, self.shape[1])
        return quat.hconj(quat.matvec(self.T, quat.hconj(y)))

    def real_matrix(self):
        """Real matrix of the composite, assembled column by column from basis images."""
        m = self.shape[1]
        cols = [phi_vec(self(phi_inv_vec(e))) for e in np.eye(4 * m)]
        return np.column_stack(cols)

    def op_norm(self):
        return op_norm(self.real_matrix())


def conjugate_operator(T):
    return ConjugatedOperator(T)


@dataclass(frozen=True)
class NormTransferReport:
    cases: int
    max_difference: float
    tol: float

    @property
    def passed(self):
        return self.max_difference <= self.tol


def norm_transfer_suite(cases=100, max_n=3, seed=0, tol=1e-10):
    """Compare the operator norms of T and of y -> conj(T conj(y)) on seeded random
    square quaternion matrices of size 1..max_n."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 5])))
    worst = 0.0
    for k in range(cases):
        n = 1 + k % max_n
        T = rng.standard_normal((n, n, 4))
        diff = abs(ConjugatedOperator(T).op_norm() - op_norm(phi_mat(T)))
        worst = max(worst, diff)
    return NormTransferReport(cases, float(worst), tol)
