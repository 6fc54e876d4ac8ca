import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from quatsmc import quat, realrep
from quatsmc.errors import PreconditionError, SingularityError

seeds = st.integers(0, 2**31 - 1)


def test_phi_quat_is_left_multiplication():
    rng = np.random.default_rng(0)
    for _ in range(10):
        q = rng.standard_normal(4)
        assert np.allclose(realrep.phi_quat(q), oracles.phi_left(q))


@settings(max_examples=40)
@given(seeds)
def test_phi_mat_is_a_homomorphism(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((2, 3, 4))
    B = rng.standard_normal((3, 2, 4))
    x = rng.standard_normal((3, 4))
    assert np.allclose(realrep.phi_mat(quat.matmul(A, B)), realrep.phi_mat(A) @ realrep.phi_mat(B))
    assert np.allclose(realrep.phi_vec(quat.matvec(A, x)), realrep.phi_mat(A) @ realrep.phi_vec(x))
    assert np.allclose(realrep.phi_mat(quat.adjoint(A)), realrep.phi_mat(A).T)
    assert np.allclose(realrep.phi_inv_mat(realrep.phi_mat(A)), A)
    assert np.allclose(realrep.phi_inv_vec(realrep.phi_vec(x)), x)


def test_phi_inv_rejects_bad_shapes():
    with pytest.raises(ValueError):
        realrep.phi_inv_mat(np.zeros((4, 6)))
    with pytest.raises(ValueError):
        realrep.phi_inv_vec(np.zeros(6))


def test_hermitian_eigenvalues_match_inertia_bisection():
    # P = [[2, 1+i], [1-i, 3]] has eigenvalues 1 and 4, each four times in Phi(P)
    P = np.zeros((2, 2, 4))
    P[0, 0, 0], P[1, 1, 0] = 2.0, 3.0
    P[0, 1] = [1.0, 1.0, 0.0, 0.0]
    P[1, 0] = [1.0, -1.0, 0.0, 0.0]
    S = realrep.phi_mat(P)
    ours = realrep.sym_eig(S).eigenvalues
    ref = oracles.bisect_eigenvalues(S.tolist())
    assert np.allclose(ours, ref, atol=1e-10)
    assert np.allclose(ours, [1, 1, 1, 1, 4, 4, 4, 4], atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_random_hermitian_spectrum_has_multiplicity_four(seed):
    rng = np.random.default_rng(seed)
    T = rng.standard_normal((2, 2, 4))
    H = quat.matmul(quat.adjoint(T), T)
    S = realrep.phi_mat(H)
    S = 0.5 * (S + S.T)
    ev = realrep.sym_eig(S).eigenvalues
    assert np.allclose(ev, oracles.bisect_eigenvalues(S.tolist()), atol=1e-9 * max(1, ev[-1]))
    assert np.allclose(ev[:4], ev[0], atol=1e-9) and np.allclose(ev[4:], ev[4], atol=1e-9)


@pytest.mark.parametrize("n", [1, 3, 8, 17, 32])
def test_sym_eig_against_scipy(n):
    rng = np.random.default_rng(n)
    M = rng.standard_normal((n, n))
    S = M + M.T
    sd = realrep.sym_eig(S, vectors=True)
    assert np.allclose(sd.eigenvalues, scipy.linalg.eigvalsh(S), atol=1e-10 * np.abs(S).max())
    V = sd.eigenvectors
    assert np.allclose(V @ np.diag(sd.eigenvalues) @ V.T, S, atol=1e-10 * np.abs(S).max())


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(PreconditionError):
        realrep.sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_singular_values_against_numpy():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((8, 4))
    assert np.allclose(realrep.singular_values(A), np.linalg.svd(A, compute_uv=False), atol=1e-10)


def test_op_norm_of_unit_quaternion_is_one():
    assert realrep.op_norm(realrep.phi_mat(quat.I)) == pytest.approx(1.0, abs=1e-12)


def test_pinv_constant_for_orthogonal_columns():
    B = np.array([[quat.ONE], [quat.I]])
    B_plus, c = realrep.pinv(realrep.phi_mat(B))
    assert c == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert np.allclose(B_plus @ realrep.phi_mat(B), np.eye(4))


def test_pinv_rank_deficient():
    B = np.array([[quat.ONE, quat.ONE], [quat.I, quat.I]])
    with pytest.raises(SingularityError) as info:
        realrep.pinv(realrep.phi_mat(B))
    assert info.value.sigma_min is not None


@settings(max_examples=30)
@given(seeds)
def test_projector_properties(seed):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((3, 2, 4))
    P = realrep.projector(B)
    assert np.allclose(P @ P, P, atol=1e-9)
    assert np.allclose(P, P.T, atol=1e-9)
    Br = realrep.phi_mat(B)
    assert np.allclose(P @ Br, Br, atol=1e-9)


def test_conjugated_operator_for_unit_i():
    op = realrep.ConjugatedOperator(np.array([[quat.I]]))
    y = np.array([[0.3, -0.2, 0.5, 0.7]])
    ref = oracles.qconj(oracles.qmul((0, 1, 0, 0), oracles.qconj(y[0])))
    assert np.allclose(op(y), ref)
    assert op.op_norm() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 3))
def test_norm_transfer(seed, n):
    rng = np.random.default_rng(seed)
    T = rng.standard_normal((n, n, 4))
    op = realrep.ConjugatedOperator(T)
    D = realrep.conj_signs(n)
    assert np.allclose(op.real_matrix(), D @ realrep.phi_mat(T) @ D)
    assert abs(op.op_norm() - realrep.op_norm(realrep.phi_mat(T))) <= 1e-10


def test_norm_transfer_suite():
    rep = realrep.norm_transfer_suite(cases=30)
    assert rep.passed and rep.cases == 30
