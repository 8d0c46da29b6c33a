import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from proxnewton.fixed_point import (
    SingularSystemError,
    assemble,
    residual,
    residual_and_jacobian,
    solve_direct,
    solve_reduced_l1,
)
from proxnewton.losses import LeastSquares
from proxnewton.regularizers import GROUP_L2, L1, GroupStructure, ProxJacobian, Regularizer, materialize, prox

from helpers import random_logistic, random_regularizer, random_spd_quadratic


def lasso1d():
    # f(x) = (x - 2)^2, g = |x|
    return LeastSquares([[1.0]], [2.0]), Regularizer(L1, 1.0, GroupStructure(1))


def newton_operator(H, V, nu):
    n = H.shape[0]
    return np.eye(n) - V @ (np.eye(n) - nu * H)


class TestResidual:
    def test_one_dimensional_optimum(self):
        f, g = lasso1d()
        assert_allclose(residual(f, g, [1.5], 0.5), [0.0], atol=1e-15)

    def test_stationary_point_without_penalty(self, rng):
        f = random_spd_quadratic(rng, 5)
        x = np.linalg.solve(f.hessian(None), -f.gradient(np.zeros(5)))
        reg = Regularizer(L1, 0.0, GroupStructure(5))
        assert np.linalg.norm(residual(f, reg, x, 0.7)) <= 1e-12

    def test_equals_prox_gradient_step(self, rng):
        f = random_logistic(rng, 20, 4)
        reg = Regularizer(GROUP_L2, 0.1, GroupStructure.single_group(4).shifted(1, 1))
        x = rng.standard_normal(5)
        nu = 0.8
        x_next = prox(reg, x - nu * f.gradient(x), nu)
        assert_allclose(residual(f, reg, x, nu), x - x_next, rtol=0, atol=1e-15)


class TestAssemble:
    def test_zero_jacobian_is_identity(self, rng):
        H = random_spd_quadratic(rng, 4).hessian(None)
        sys = assemble(H, ProxJacobian.zero(4), 1.0, np.ones(4))
        v = rng.standard_normal(4)
        assert_allclose(sys.matvec(v), v)
        assert_allclose(sys.dense(), np.eye(4))

    def test_scalar_active(self):
        sys = assemble(np.array([[2.0]]), ProxJacobian.identity(1), 0.5, np.zeros(1))
        assert_allclose(sys.dense(), [[1.0]])

    def test_identity_jacobian_gives_nu_h(self, rng):
        H = random_spd_quadratic(rng, 4).hessian(None)
        sys = assemble(H, ProxJacobian.identity(4), 0.3, np.zeros(4))
        assert_allclose(sys.dense(), 0.3 * H, atol=1e-15)

    def test_active_sets(self):
        V = ProxJacobian(4, np.array([1.0, 0.0, 1.0, 0.0]))
        sys = assemble(np.eye(4), V, 1.0, np.zeros(4))
        assert sys.active_set.tolist() == [0, 2]
        assert sys.inactive_set.tolist() == [1, 3]

    def test_matvec_closure_matches_dense(self, rng):
        f = random_logistic(rng, 30, 5)
        x = rng.standard_normal(6)
        reg = random_regularizer(rng, 6, GROUP_L2, 0.05, n_unpen=1)
        F, V = residual_and_jacobian(reg, x, f.gradient(x), 1.0)
        dense = assemble(f.hessian(x), V, 1.0, F)
        lazy = assemble(lambda v: f.hessian_vector(x, v), V, 1.0, F)
        v = rng.standard_normal(6)
        assert_allclose(lazy.matvec(v), dense.dense() @ v, rtol=1e-12, atol=1e-14)


class TestSolve:
    def test_identity(self, rng):
        r = rng.standard_normal(3)
        sys = assemble(np.eye(3), ProxJacobian.zero(3), 1.0, r)
        assert_allclose(solve_direct(sys), -r)

    def test_zero_rhs(self):
        sys = assemble(np.eye(1), ProxJacobian.zero(1), 1.0, np.zeros(1))
        assert_allclose(solve_direct(sys), [0.0])

    def test_two_by_two(self):
        # U = [[2, 1], [0, 1]] from V = I, nu = 1, H = U
        U = np.array([[2.0, 1.0], [0.0, 1.0]])
        sys = assemble(U, ProxJacobian.identity(2), 1.0, np.array([-3.0, -1.0]))
        assert_allclose(solve_direct(sys), [1.0, 1.0], rtol=1e-14)

    def test_singular_reports_iteration(self):
        sys = assemble(np.zeros((2, 2)), ProxJacobian.identity(2), 1.0, np.ones(2))
        with pytest.raises(SingularSystemError) as exc:
            solve_direct(sys, iteration=7)
        assert exc.value.iteration == 7

    def test_direct_residual_tolerance(self, rng):
        f = random_spd_quadratic(rng, 30)
        reg = random_regularizer(rng, 30, GROUP_L2, 0.3)
        x = rng.standard_normal(30)
        F, V = residual_and_jacobian(reg, x, f.gradient(x), 2.0)
        sys = assemble(f.hessian(None), V, 2.0, F)
        d = solve_direct(sys)
        assert np.linalg.norm(sys.dense() @ d + F) <= 1e-12 * max(1.0, np.linalg.norm(F))

    def test_reduced_all_inactive(self, rng):
        r = rng.standard_normal(5)
        H = random_spd_quadratic(rng, 5).hessian(None)
        assert_allclose(solve_reduced_l1(assemble(H, ProxJacobian.zero(5), 1.0, r)), -r)

    def test_reduced_all_active(self, rng):
        r = rng.standard_normal(5)
        H = random_spd_quadratic(rng, 5).hessian(None)
        d = solve_reduced_l1(assemble(H, ProxJacobian.identity(5), 0.5, r))
        assert_allclose(0.5 * H @ d, -r, rtol=1e-12, atol=1e-14)

    def test_reduced_requires_diagonal(self, rng):
        reg = Regularizer(GROUP_L2, 0.1, GroupStructure.single_group(3))
        _, V = residual_and_jacobian(reg, np.ones(3), np.zeros(3), 1.0)
        with pytest.raises(ValueError):
            solve_reduced_l1(assemble(np.eye(3), V, 1.0, np.ones(3)))

    @pytest.mark.parametrize("seed", range(10))
    def test_reduced_matches_dense_oracle(self, seed):
        rng = np.random.default_rng(seed)
        f = random_spd_quadratic(rng, 10)
        x = rng.standard_normal(10)
        lam = float(np.median(np.abs(x - f.gradient(x))))
        reg = random_regularizer(rng, 10, L1, lam, n_unpen=int(seed % 2))
        F, V = residual_and_jacobian(reg, x, f.gradient(x), 1.0)
        assert 0 < V.diag.sum() < 10
        sys = assemble(f.hessian(None), V, 1.0, F)
        oracle = np.linalg.solve(newton_operator(f.hessian(None), materialize(V), 1.0), -F)
        d = solve_reduced_l1(sys)
        assert np.linalg.norm(d - oracle) <= 1e-10 * np.linalg.norm(oracle)


class TestEigenvalues:
    def test_tight_all_inactive(self):
        f = LeastSquares(np.eye(3), np.zeros(3))  # mu = 2
        reg = Regularizer(L1, 100.0, GroupStructure(3))
        x = np.full(3, 0.1)
        _, V = residual_and_jacobian(reg, x, f.gradient(x), 0.5)
        ev = np.linalg.eigvals(newton_operator(f.hessian(None), materialize(V), 0.5))
        assert_allclose(ev.real.min(), 1.0)
        assert 0.5 * f.mu == 1.0

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**6), st.sampled_from([L1, GROUP_L2]), st.sampled_from([0.1, 0.5, 1.0]))
    def test_lower_bound_when_bound_below_one(self, seed, kind, nu):
        # Hessian spectrum in [0.2, 1] keeps nu*mu <= 1, where this bound is valid
        rng = np.random.default_rng(seed)
        f = random_spd_quadratic(rng, 8, lo=0.2, hi=1.0)
        reg = random_regularizer(rng, 8, kind, float(rng.uniform(0, 2)))
        x = 2 * rng.standard_normal(8)
        _, V = residual_and_jacobian(reg, x, f.gradient(x), nu)
        ev = np.linalg.eigvals(newton_operator(f.hessian(None), materialize(V), nu))
        assert np.abs(ev.imag).max() <= 1e-8
        assert ev.real.min() >= nu * f.mu - 1e-8

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**6), st.sampled_from([L1, GROUP_L2]), st.sampled_from([0.1, 1.0, 10.0]))
    def test_capped_bound(self, seed, kind, nu):
        rng = np.random.default_rng(seed)
        f = random_spd_quadratic(rng, 8, lo=0.2, hi=2.0)
        reg = random_regularizer(rng, 8, kind, float(rng.uniform(0, 2)))
        x = 2 * rng.standard_normal(8)
        _, V = residual_and_jacobian(reg, x, f.gradient(x), nu)
        ev = np.linalg.eigvals(newton_operator(f.hessian(None), materialize(V), nu))
        assert np.abs(ev.imag).max() <= 1e-8
        assert ev.real.min() >= min(1.0, nu * f.mu) - 1e-8

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10**6))
    def test_product_eigenvalue_bounds(self, seed):
        # eigenvalues of A B with A PSD, B symmetric lie in [min(|A| lmin(B), 0), max(|A| lmax(B), 0)]
        rng = np.random.default_rng(seed)
        n = 6
        G = rng.standard_normal((n, int(rng.integers(1, n + 1))))
        A = G @ G.T
        S = rng.standard_normal((n, n))
        B = S + S.T
        ev = np.linalg.eigvals(A @ B)
        nA = np.linalg.norm(A, 2)
        bl, bu = np.linalg.eigvalsh(B)[[0, -1]]
        tol = 1e-8 * max(1.0, nA * max(abs(bl), abs(bu)))
        assert np.abs(ev.imag).max() <= tol
        assert ev.real.min() >= min(nA * bl, 0) - tol
        assert ev.real.max() <= max(nA * bu, 0) + tol

    def test_lna_residual_decay(self, rng):
        f = random_logistic(rng, 40, 5, ridge=0.05)
        reg = random_regularizer(rng, 6, L1, 0.02, n_unpen=1)
        xs = rng.standard_normal(6)
        F_star = residual(f, reg, xs, 1.0)
        for _ in range(5):
            ray = rng.standard_normal(6)
            ray /= np.linalg.norm(ray)
            errs = []
            for t in (1e-1, 1e-3, 1e-5):
                x = xs + t * ray
                F, V = residual_and_jacobian(reg, x, f.gradient(x), 1.0)
                U = newton_operator(f.hessian(x), materialize(V), 1.0)
                errs.append(np.linalg.norm(F_star - F - U @ (xs - x)) / t)
            assert errs[-1] < 1e-4
            assert errs[-1] <= errs[0] + 1e-12
