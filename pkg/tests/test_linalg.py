import numpy as np
import pytest

from corp.errors import (
    DimensionMismatch,
    NonPositiveLambda,
    NonSquare,
    NotSymmetric,
    SingularSystem,
)
from corp.linalg import solve_ridge, solve_sylvester_ridge, svd, sym_eig


def rand_psd(rng, n, scale=1.0):
    r = rng.normal(size=(n, n))
    return scale * (r @ r.T)


class TestSymEig:
    def test_identity(self):
        e = sym_eig(np.eye(3))
        assert np.allclose(e.eigenvalues, [1, 1, 1])
        u = e.eigenvectors
        assert np.max(np.abs(u.T @ u - np.eye(3))) <= 1e-8

    def test_diagonal(self):
        e = sym_eig(np.diag([4.0, 1.0]))
        assert np.allclose(e.eigenvalues, [4.0, 1.0])
        # axis-aligned up to sign
        assert np.allclose(np.abs(e.eigenvectors), np.eye(2), atol=1e-12)

    def test_reconstruction_random(self):
        rng = np.random.default_rng(0)
        r = rng.normal(size=(6, 6))
        a = r.T @ r
        e = sym_eig(a)
        recon = e.eigenvectors @ np.diag(e.eigenvalues) @ e.eigenvectors.T
        assert np.max(np.abs(recon - a)) <= 1e-6 * np.max(np.abs(a))
        assert np.max(np.abs(e.eigenvectors.T @ e.eigenvectors - np.eye(6))) <= 1e-8
        assert np.all(np.diff(e.eigenvalues) <= 1e-12)

    def test_errors(self):
        with pytest.raises(NonSquare):
            sym_eig(np.zeros((2, 3)))
        with pytest.raises(NotSymmetric):
            sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        a = rand_psd(rng, 5)
        e1, e2 = sym_eig(a), sym_eig(a)
        assert np.array_equal(e1.eigenvalues, e2.eigenvalues)
        assert np.array_equal(e1.eigenvectors, e2.eigenvectors)


class TestSvd:
    def test_identity(self):
        f = svd(np.eye(4))
        assert np.allclose(f.singular_values, np.ones(4))

    def test_rank_one(self):
        rng = np.random.default_rng(2)
        u = rng.normal(size=5)
        u /= np.linalg.norm(u)
        v = rng.normal(size=5)
        v /= np.linalg.norm(v)
        f = svd(np.outer(u, v))
        assert abs(f.singular_values[0] - 1.0) <= 1e-12
        assert np.all(f.singular_values[1:] <= 1e-12)
        assert f.rank() == 1

    def test_reconstruction(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(5, 5))
        f = svd(a)
        recon = f.u @ np.diag(f.singular_values) @ f.v.T
        assert np.max(np.abs(recon - a)) <= 1e-6 * (1.0 + np.max(np.abs(a)))
        assert np.all(np.diff(f.singular_values) <= 1e-12)
        assert np.all(f.singular_values >= 0)

    def test_rank_counts_above_threshold(self):
        a = np.diag([3.0, 1.0, 1e-14, 0.0])
        assert svd(a).rank() == 2


class TestSolveRidge:
    def test_identity_gram(self):
        x = solve_ridge(np.eye(2), np.array([[3.0, 4.0]]), 0.0)
        assert np.allclose(x, [[3.0, 4.0]])

    def test_diagonal_closed_form(self):
        x = solve_ridge(np.diag([1.0, 3.0]), np.array([[2.0, 8.0]]), 1.0)
        assert np.allclose(x, [[1.0, 2.0]])

    def test_matches_dense_inverse_oracle(self):
        rng = np.random.default_rng(4)
        gram = rand_psd(rng, 5)
        rhs = rng.normal(size=(2, 5))
        lam = 0.1
        x = solve_ridge(gram, rhs, lam)
        oracle = rhs @ np.linalg.inv(gram + lam * np.eye(5))
        assert np.max(np.abs(x - oracle)) <= 1e-9

    def test_residual_contract(self):
        rng = np.random.default_rng(5)
        gram = rand_psd(rng, 8)
        rhs = rng.normal(size=(3, 8))
        lam = 1e-3
        x = solve_ridge(gram, rhs, lam)
        resid = np.max(np.abs(x @ (gram + lam * np.eye(8)) - rhs))
        assert resid <= 1e-8 * (1.0 + np.max(np.abs(rhs)))

    def test_singular_at_lambda_zero(self):
        gram = np.outer([1.0, 2.0], [1.0, 2.0])  # rank 1
        with pytest.raises(SingularSystem):
            solve_ridge(gram, np.array([[1.0, 1.0]]), 0.0)

    def test_perturbation_never_improves_objective(self):
        # ridge optimum: J(X) = tr(X (G + lam I) X^T) - 2 tr(rhs X^T)
        rng = np.random.default_rng(6)
        gram = rand_psd(rng, 6)
        rhs = rng.normal(size=(3, 6))
        lam = 0.05
        x = solve_ridge(gram, rhs, lam)
        sys = gram + lam * np.eye(6)

        def obj(m):
            return np.trace(m @ sys @ m.T) - 2.0 * np.trace(rhs @ m.T)

        base = obj(x)
        for _ in range(20):
            delta = 1e-3 * rng.normal(size=x.shape)
            assert obj(x + delta) >= base - 1e-12


class TestSylvester:
    def test_identity_grams(self):
        rng = np.random.default_rng(7)
        c = rng.normal(size=(3, 3))
        m = solve_sylvester_ridge(np.eye(3), np.eye(3), c, 1.0)
        assert np.allclose(m, c / 2.0)

    def test_scalar_closed_form(self):
        m = solve_sylvester_ridge([[2.0]], [[3.0]], [[12.0]], 2.0)
        assert np.allclose(m, [[1.5]])

    @pytest.mark.parametrize("p,r", [(2, 2), (4, 3), (6, 6)])
    def test_matches_kronecker_oracle(self, p, r):
        rng = np.random.default_rng(100 + p * 10 + r)
        g_q = rand_psd(rng, p)
        g_k = rand_psd(rng, r)
        rhs = rng.normal(size=(p, r))
        lam = 1e-2
        m = solve_sylvester_ridge(g_q, g_k, rhs, lam)
        # row-major vec: vec(G_q M G_k) = kron(G_q, G_k^T) vec(M)
        system = np.kron(g_q, g_k.T) + lam * np.eye(p * r)
        oracle = np.linalg.solve(system, rhs.ravel()).reshape(p, r)
        assert np.max(np.abs(m - oracle)) <= 1e-8

    def test_residual_dim_64(self):
        rng = np.random.default_rng(8)
        g_q = rand_psd(rng, 64, scale=1.0 / 64.0)
        g_k = rand_psd(rng, 64, scale=1.0 / 64.0)
        rhs = rng.uniform(-1.0, 1.0, size=(64, 64))
        lam = 1e-2
        m = solve_sylvester_ridge(g_q, g_k, rhs, lam)
        resid = np.max(np.abs(g_q @ m @ g_k + lam * m - rhs))
        assert resid <= 1e-7 * (1.0 + np.max(np.abs(rhs)))

    def test_random_substitution(self):
        rng = np.random.default_rng(9)
        g_q = rand_psd(rng, 4)
        g_k = rand_psd(rng, 4)
        rhs = rng.normal(size=(4, 4))
        m = solve_sylvester_ridge(g_q, g_k, rhs, 1e-2)
        assert np.max(np.abs(g_q @ m @ g_k + 1e-2 * m - rhs)) <= 1e-7 * (
            1.0 + np.max(np.abs(rhs))
        )

    def test_errors(self):
        with pytest.raises(NonPositiveLambda):
            solve_sylvester_ridge(np.eye(2), np.eye(2), np.zeros((2, 2)), 0.0)
        with pytest.raises(DimensionMismatch):
            solve_sylvester_ridge(np.eye(2), np.eye(3), np.zeros((3, 2)), 1.0)

    def test_psd_clamp_keeps_denominators_safe(self):
        # grams with a slightly negative eigenvalue from roundoff
        g = np.diag([1.0, -1e-14])
        rhs = np.ones((2, 2))
        m = solve_sylvester_ridge(g, g, rhs, 1e-3)
        assert np.all(np.isfinite(m))
        assert np.max(np.abs(m)) <= 1e3 + 1.0 / 1e-3
