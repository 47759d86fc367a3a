import numpy as np
import pytest
from scipy.linalg import expm

from floatbase import lie, state as st
from floatbase.lie import Group
from floatbase.state import Belief, EstimatorState

from oracles import ad_matrix, jacobian_series, random_state


def small_eps(rng, scale=0.5):
    return rng.normal(size=st.DIM) * scale


def test_block_order_is_fixed():
    order = [st.P, st.R, st.V, st.DL, st.ZL, st.DR, st.ZR, st.BA, st.BG]
    assert [s.start for s in order] == list(range(0, 27, 3))
    assert st.DIM == 27


def test_exp_of_zero_is_identity():
    X = st.state_exp(np.zeros(st.DIM))
    assert np.array_equal(st.to_matrix(X), np.eye(20))


def test_exp_bias_only():
    eps = np.zeros(st.DIM)
    eps[st.BIAS] = np.arange(1.0, 7.0)
    X = st.state_exp(eps)
    assert np.array_equal(X.b, np.arange(1.0, 7.0))
    for M in (X.R, X.Zl, X.Zr):
        assert np.array_equal(M, np.eye(3))
    for v in (X.p, X.v, X.dl, X.dr):
        assert np.array_equal(v, np.zeros(3))


def test_exp_matches_composite_matrix_exponential():
    rng = np.random.default_rng(1)
    for _ in range(50):
        eps = small_eps(rng)
        assert np.abs(st.to_matrix(st.state_exp(eps)) - expm(st.hat_state(eps))).max() < 1e-10


def test_hat_sparsity():
    M = st.hat_state(np.ones(st.DIM))
    mask = np.zeros((20, 20), dtype=bool)
    for a, n in ((0, 5), (5, 4), (9, 4), (13, 7)):
        mask[a:a + n, a:a + n] = True
    assert not np.any(M[~mask])
    assert np.array_equal(st.vee_state(M), np.ones(st.DIM))


def test_log_identity_and_roundtrip():
    assert np.array_equal(st.state_log(st.identity()), np.zeros(st.DIM))
    rng = np.random.default_rng(2)
    for _ in range(100):
        eps = small_eps(rng)
        assert np.abs(st.state_log(st.state_exp(eps)) - eps).max() < 1e-9


def test_compose_inverse_is_identity():
    rng = np.random.default_rng(3)
    for _ in range(20):
        X = random_state(rng)
        I = st.state_compose(X, st.state_inverse(X))
        assert np.abs(st.to_matrix(I) - np.eye(20)).max() < 1e-12


def test_compose_matches_matrix_product():
    rng = np.random.default_rng(4)
    X, Y = random_state(rng), random_state(rng)
    M = st.to_matrix(X) @ st.to_matrix(Y)
    assert np.abs(st.to_matrix(st.state_compose(X, Y)) - M).max() < 1e-12
    assert np.abs(st.to_matrix(st.from_matrix(M)) - M).max() == 0


def test_adjoint_identity_and_bias_block():
    assert np.array_equal(st.state_adjoint(st.identity()), np.eye(st.DIM))
    rng = np.random.default_rng(5)
    A = st.state_adjoint(random_state(rng))
    assert np.array_equal(A[st.BIAS, st.BIAS], np.eye(6))
    assert not np.any(A[st.BIAS, :21]) and not np.any(A[:21, st.BIAS])


def test_adjoint_defining_identity():
    rng = np.random.default_rng(6)
    for _ in range(20):
        X = random_state(rng)
        a = rng.normal(size=st.DIM)
        M = st.to_matrix(X)
        rhs = st.vee_state(M @ st.hat_state(a) @ np.linalg.inv(M))
        assert np.abs(st.state_adjoint(X) @ a - rhs).max() < 1e-9


def test_left_jacobian_blocks():
    assert np.array_equal(st.state_left_jacobian(np.zeros(st.DIM)), np.eye(st.DIM))
    rng = np.random.default_rng(7)
    eps = small_eps(rng)
    J = st.state_left_jacobian(eps)
    blocks = [(st.BASE, Group.SE23), (st.LEFT, Group.SE3), (st.RIGHT, Group.SE3), (st.BIAS, Group.T6)]
    mask = np.zeros((st.DIM, st.DIM), dtype=bool)
    for sl, g in blocks:
        mask[sl, sl] = True
        assert np.abs(J[sl, sl] - jacobian_series(ad_matrix(g, eps[sl]))).max() < 1e-8
    assert not np.any(J[~mask])


def test_operations_are_blockwise():
    rng = np.random.default_rng(8)
    eps = small_eps(rng)
    X = st.state_exp(eps)
    base = lie.exp(Group.SE23, eps[st.BASE])
    assert np.allclose(X.R, base[:3, :3], atol=0) and np.allclose(X.p, base[:3, 3]) and np.allclose(X.v, base[:3, 4])
    left = lie.exp(Group.SE3, eps[st.LEFT])
    assert np.array_equal(X.Zl, left[:3, :3]) and np.allclose(X.dl, left[:3, 3], atol=0)


def test_belief_check():
    Belief(EstimatorState(), np.eye(st.DIM)).check()
    with pytest.raises(ValueError):
        bad = np.eye(st.DIM)
        bad[0, 1] = 1.0
        Belief(EstimatorState(), bad).check()
    with pytest.raises(ValueError):
        Belief(EstimatorState(), -np.eye(st.DIM)).check()
