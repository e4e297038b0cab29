import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from covest.errors import DimensionError, InfeasibleError, ValidationError
from covest.matcore import (
    check_psd,
    direct_sum,
    fix_phase,
    hermitian_eig,
    kron,
    min_generalized_eig,
    pairwise_sum,
    partial_trace,
    projector_onto_span,
    random_hermitian,
    random_isometry,
    random_psd,
    random_unitary,
    span_basis,
    unvectorize,
    vectorize,
)


def rand_c(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_kron_vectorize_identity(d1, d2, seed):
    rng = np.random.default_rng(seed)
    A, B, X = rand_c(rng, d1, d1), rand_c(rng, d2, d2), rand_c(rng, d1, d2)
    # row-major stacking: (A (x) B)|X>> = |A X B^T>>
    lhs = kron(A, B) @ X.reshape(-1)
    rhs = (A @ X @ B.T).reshape(-1)
    assert np.abs(lhs - rhs).max() < 1e-10


def test_vectorize_roundtrip_and_identity():
    rng = np.random.default_rng(0)
    A = rand_c(rng, 3, 3)
    assert np.abs(unvectorize(vectorize(A)) - A).max() == 0
    assert np.array_equal(vectorize(np.eye(2)), np.array([1, 0, 0, 1]))
    # |I>> is the unnormalized maximally entangled vector
    assert abs(np.vdot(vectorize(np.eye(4)), vectorize(np.eye(4))) - 4) < 1e-12
    with pytest.raises(DimensionError):
        unvectorize(np.ones(5))
    with pytest.raises(DimensionError):
        vectorize(np.ones((2, 3)))


def test_direct_sum():
    A = np.array([[1.0]])
    B = np.array([[2.0, 3.0], [4.0, 5.0]])
    S = direct_sum(A, B)
    assert S.shape == (3, 3)
    assert S[0, 0] == 1 and S[1, 2] == 3 and S[0, 1] == 0


def test_hermitian_eig_sorted_and_rejects_non_hermitian():
    rng = np.random.default_rng(1)
    H = random_hermitian(5, rng)
    vals, vecs = hermitian_eig(H)
    assert np.all(np.diff(vals) >= 0)
    assert np.abs(H @ vecs - vecs * vals).max() < 1e-10
    with pytest.raises(ValidationError):
        hermitian_eig(np.array([[0, 1], [0, 0]]))


def test_check_psd():
    with pytest.raises(ValidationError):
        check_psd(np.diag([1.0, -0.1]))
    check_psd(np.diag([1.0, 0.0]))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_min_generalized_eig_matches_scipy(d, seed):
    rng = np.random.default_rng(seed)
    W = random_psd(d, d, rng)
    N = random_psd(d, d, rng) + 0.1 * np.eye(d)
    val, x = min_generalized_eig(W, N)
    ref = scipy.linalg.eigh(W, N, eigvals_only=True)[0]
    assert abs(val - ref) < 1e-8 * max(1.0, abs(ref))
    assert abs(np.vdot(x, N @ x).real - 1) < 1e-10
    assert abs(np.vdot(x, W @ x).real - val) < 1e-8 * max(1.0, abs(val))


def test_min_generalized_eig_singular_normalization():
    # N has a kernel; the optimum over its support beats every sampled feasible vector
    rng = np.random.default_rng(2)
    d = 5
    B = rand_c(rng, d, 3)
    N = B @ B.conj().T
    W = random_psd(d, 4, rng)
    val, x = min_generalized_eig(W, N)
    assert abs(np.vdot(x, N @ x).real - 1) < 1e-9
    for _ in range(200):
        y = rand_c(rng, d)
        y /= np.sqrt(np.vdot(y, N @ y).real)
        assert np.vdot(y, W @ y).real >= val - 1e-9


def test_min_generalized_eig_infeasible():
    with pytest.raises(InfeasibleError):
        min_generalized_eig(np.eye(3), np.zeros((3, 3)))
    with pytest.raises(DimensionError):
        min_generalized_eig(np.eye(3), np.eye(2))


def test_fix_phase():
    x = np.array([0, 1j, 1])
    y = fix_phase(x)
    assert abs(y[1] - 1) < 1e-15
    assert abs(abs(np.vdot(x, y)) - 2) < 1e-12


def test_partial_trace_product():
    rng = np.random.default_rng(3)
    A, B, C = random_hermitian(2, rng), random_hermitian(3, rng), random_hermitian(2, rng)
    full = np.kron(np.kron(A, B), C)
    assert np.abs(partial_trace(full, [2, 3, 2], [1]) - np.trace(B) * np.kron(A, C)).max() < 1e-10
    assert np.abs(partial_trace(full, [2, 3, 2], [0, 2]) - np.trace(A) * np.trace(C) * B).max() < 1e-10
    # einsum oracle on a generic operator
    M = rand_c(rng, 12, 12)
    ref = np.einsum("abcdbf->acdf", M.reshape(2, 3, 2, 2, 3, 2)).reshape(4, 4)
    assert np.abs(partial_trace(M, [2, 3, 2], [1]) - ref).max() < 1e-12
    with pytest.raises(DimensionError):
        partial_trace(M, [2, 2], [0])


def test_span_and_projector():
    rng = np.random.default_rng(4)
    a, b = rand_c(rng, 4), rand_c(rng, 4)
    P = projector_onto_span([a, b, a + 2j * b])
    assert abs(np.trace(P).real - 2) < 1e-10
    assert np.abs(P @ P - P).max() < 1e-10
    assert np.abs(P @ a - a).max() < 1e-10
    assert span_basis([np.zeros(3)]).shape == (3, 0)
    assert np.abs(projector_onto_span([], dim=3)).max() == 0
    with pytest.raises(DimensionError):
        span_basis([])
    with pytest.raises(DimensionError):
        span_basis([np.ones(2), np.ones(3)])


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 300), st.integers(0, 2**32 - 1))
def test_pairwise_sum_matches_sum(n, seed):
    x = np.random.default_rng(seed).normal(size=(n, 3))
    assert np.abs(pairwise_sum(x) - x.sum(axis=0)).max() < 1e-10


def test_random_unitary_and_isometry():
    rng = np.random.default_rng(5)
    U = random_unitary(4, rng)
    assert np.abs(U.conj().T @ U - np.eye(4)).max() < 1e-12
    V = random_isometry(2, 5, rng)
    assert np.abs(V.conj().T @ V - np.eye(2)).max() < 1e-12
    with pytest.raises(DimensionError):
        random_isometry(3, 2, rng)
    assert np.linalg.matrix_rank(random_psd(5, 2, rng)) == 2
