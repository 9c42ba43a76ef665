import numpy as np
import pytest
import scipy.sparse as sp

from overlayhp.solvers import (
    NonSPDError,
    condition_number_spd,
    pcg_jacobi,
    solve_direct,
)


def test_direct_identity():
    K = sp.identity(4, format="csr")
    F = np.array([1.0, 0.0, 0.0, 0.0])
    assert np.allclose(solve_direct(K, F), F)


def test_direct_hand_case():
    K = sp.csr_matrix(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    x = solve_direct(K, np.array([1.0, 0.0]))
    assert x == pytest.approx([2.0 / 3.0, 1.0 / 3.0], rel=1e-14)


def test_direct_random_spd_residual():
    rng = np.random.default_rng(123)
    A = rng.standard_normal((50, 50))
    K = sp.csr_matrix(A @ A.T + 50 * np.eye(50))
    F = rng.standard_normal(50)
    x = solve_direct(K, F)
    assert np.linalg.norm(K @ x - F) / np.linalg.norm(F) < 1e-10


def test_pcg_diagonal_one_iteration():
    K = sp.diags([1.0, 2.0, 3.0, 4.0]).tocsr()
    F = np.array([1.0, 2.0, -1.0, 0.5])
    report = pcg_jacobi(K, F)
    assert report.converged
    assert report.iterations == 1
    assert np.allclose(report.x, F / np.array([1.0, 2.0, 3.0, 4.0]))


def test_pcg_identity_one_iteration():
    K = sp.identity(7, format="csr")
    F = np.arange(1.0, 8.0)
    report = pcg_jacobi(K, F)
    assert report.iterations == 1 and report.converged


def test_pcg_tridiagonal_krylov_bound():
    n = 10
    K = sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]).tocsr()
    F = np.ones(n)
    report = pcg_jacobi(K, F, rel_tol=1e-12)
    assert report.converged
    assert report.iterations <= n
    assert np.linalg.norm(K @ report.x - F) / np.linalg.norm(F) <= 1e-12


def test_pcg_max_iter_flagged():
    n = 40
    K = sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]).tocsr()
    report = pcg_jacobi(K, np.ones(n), rel_tol=1e-14, max_iter=3)
    assert not report.converged
    assert report.iterations == 3


def test_condition_number_examples():
    assert condition_number_spd(np.eye(5)) == pytest.approx(1.0)
    assert condition_number_spd(np.diag([1.0, 10.0])) == pytest.approx(10.0)
    assert condition_number_spd(np.array([[2.0, -1.0], [-1.0, 2.0]])) == pytest.approx(3.0)


def test_condition_number_non_spd():
    with pytest.raises(NonSPDError):
        condition_number_spd(np.diag([1.0, -1.0]))


def test_condition_number_scale_invariant():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((20, 20))
    K = A @ A.T + 20 * np.eye(20)
    k1 = condition_number_spd(K)
    k2 = condition_number_spd(1e3 * K)
    assert k1 == pytest.approx(k2, rel=1e-10)


def test_pcg_invariant_under_symmetric_rescaling():
    rng = np.random.default_rng(17)
    A = rng.standard_normal((30, 30))
    K = A @ A.T + 30 * np.eye(30)
    F = rng.standard_normal(30)
    it0 = pcg_jacobi(sp.csr_matrix(K), F, rel_tol=1e-10).iterations
    d = rng.uniform(0.5, 2.0, 30)
    Dm = np.diag(1.0 / np.sqrt(d))
    K2 = Dm @ K @ Dm
    F2 = Dm @ F
    it1 = pcg_jacobi(sp.csr_matrix(K2), F2, rel_tol=1e-10).iterations
    assert abs(it0 - it1) <= 1
