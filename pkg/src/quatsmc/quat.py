"""Quaternion arithmetic on numpy arrays.

A quaternion is a length-4 array ``(a, b, c, d)`` standing for ``a + bi + cj + dk``.
A quaternion vector of length n is an ``(n, 4)`` array and a quaternion matrix is an
``(n, m, 4)`` array.  Every function broadcasts over leading axes.
"""
from __future__ import annotations

import numpy as np

ZERO_TOL = 1e-14

ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([0.0, 1.0, 0.0, 0.0])
J = np.array([0.0, 0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 0.0, 1.0])

_CONJ_SIGNS = np.array([1.0, -1.0, -1.0, -1.0])


def quat(a=0.0, b=0.0, c=0.0, d=0.0):
    return np.array([a, b, c, d], dtype=float)


def as_quat_array(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != 4:
        raise ValueError(f"{name}: last axis must have length 4, got shape {arr.shape}")
    return arr


def as_hvector(x, n=None, name="x"):
    """Coerce to an ``(n, 4)`` quaternion vector; a bare quaternion becomes n=1."""
    arr = as_quat_array(x, name)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"{name}: expected shape (n, 4), got {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name}: expected {n} quaternion entries, got {arr.shape[0]}")
    return arr


def as_hmatrix(A, name="A"):
    arr = as_quat_array(A, name)
    if arr.ndim == 1:
        arr = arr[None, None, :]
    if arr.ndim != 3:
        raise ValueError(f"{name}: expected shape (n, m, 4), got {arr.shape}")
    return arr


def mul(p, q):
    """Hamilton product, broadcasting over leading axes."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    a1, b1, c1, d1 = p[..., 0], p[..., 1], p[..., 2], p[..., 3]
    a2, b2, c2, d2 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    out = np.empty(np.broadcast_shapes(p.shape, q.shape))
    out[..., 0] = a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2
    out[..., 1] = a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2
    out[..., 2] = a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2
    out[..., 3] = a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2
    return out


def conj(q):
    return np.asarray(q, dtype=float) * _CONJ_SIGNS


# componentwise conjugation of a quaternion vector is the same elementwise map
hconj = conj


def real_part(q):
    return np.asarray(q, dtype=float)[..., 0]


def norm(x):
    """Euclidean norm over every real component of the trailing quaternion vector.

    For an ``(..., n, 4)`` array the reduction runs over the last two axes; a bare
    ``(4,)`` quaternion returns its modulus.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return float(np.sqrt(np.dot(x, x)))
    return np.sqrt(np.sum(x * x, axis=(-2, -1)))


def inner_re(x, y):
    """Real part of sum(conj(x_i) y_i); equals the dot product of real components."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"inner_re: shape mismatch {x.shape} vs {y.shape}")
    if x.ndim == 1:
        return float(np.dot(x, y))
    return np.sum(x * y, axis=(-2, -1))


def sgn_h(s):
    """Quaternionic sign: s/||s|| for s != 0 and the zero vector otherwise."""
    s = np.asarray(s, dtype=float)
    r = norm(s)
    if np.ndim(r) == 0:
        return np.zeros_like(s) if r <= ZERO_TOL else s / r
    r = np.asarray(r)
    safe = np.where(r > ZERO_TOL, r, 1.0)
    out = s / safe[..., None, None]
    out[r <= ZERO_TOL] = 0.0
    return out


def matvec(A, x):
    """Quaternion matrix times vector: ``(..., n, m, 4) x (..., m, 4) -> (..., n, 4)``."""
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float)
    return mul(A, x[..., None, :, :]).sum(axis=-2)


def matmul(A, B):
    """Quaternion matrix product ``(n, k, 4) x (k, m, 4) -> (n, m, 4)``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return mul(A[..., :, :, None, :], B[..., None, :, :, :]).sum(axis=-3)


def adjoint(A):
    """Conjugate transpose of a quaternion matrix."""
    return np.swapaxes(conj(A), -3, -2)


def identity(n):
    out = np.zeros((n, n, 4))
    out[np.arange(n), np.arange(n), 0] = 1.0
    return out


def random_hvectors(rng, count, n):
    """Uniformly random unit quaternion vectors, shape ``(count, n, 4)``."""
    g = rng.standard_normal((count, n, 4))
    return g / norm(g)[:, None, None]
