import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose, assert_array_equal

from proxnewton.regularizers import (
    GROUP_L2,
    L1,
    GroupStructure,
    ProxJacobian,
    Regularizer,
    ShrinkBlock,
    StructureError,
    apply_jacobian,
    materialize,
    prox,
    prox_jacobian,
)

from helpers import random_regularizer

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def l1(n, lam=1.0, unpen=()):
    return Regularizer(L1, lam, GroupStructure(n, (), unpen))


def one_group(n, lam=1.0):
    return Regularizer(GROUP_L2, lam, GroupStructure.single_group(n))


class TestGroupStructure:
    def test_overlapping_groups_rejected(self):
        with pytest.raises(StructureError):
            GroupStructure(4, ((0, 1), (1, 2)))

    def test_group_overlapping_unpenalized_rejected(self):
        with pytest.raises(StructureError):
            GroupStructure(3, ((0, 1),), (1,))

    def test_out_of_range(self):
        with pytest.raises(StructureError):
            GroupStructure(3, ((0, 3),))

    def test_contiguous(self):
        s = GroupStructure.contiguous(7, 3, offset=1)
        assert s.unpenalized == (0,)
        assert sum(len(g) for g in s.groups) == 6
        assert_array_equal(s.grouped_mask, [False] + [True] * 6)

    def test_shifted(self):
        s = GroupStructure.single_group(3).shifted(1, unpenalized_front=1)
        assert s.n == 4
        assert s.groups == ((1, 2, 3),)
        assert s.unpenalized == (0,)

    def test_group_l2_must_cover_penalized(self):
        with pytest.raises(StructureError):
            Regularizer(GROUP_L2, 1.0, GroupStructure(3, ((0, 1),)))

    def test_negative_lambda(self):
        with pytest.raises(ValueError):
            l1(2, lam=-1.0)


class TestProx:
    def test_l1_soft_threshold(self):
        assert_allclose(prox(l1(3), [2.0, -0.5, 1.0], 1.0), [1.0, 0.0, 0.0])

    def test_group_shrink(self):
        assert_allclose(prox(one_group(2), [3.0, 4.0], 2.5), [1.5, 2.0])

    def test_group_boundary_is_zero(self):
        assert_array_equal(prox(one_group(2), [3.0, 4.0], 5.0), [0.0, 0.0])

    def test_unpenalized_passthrough(self):
        reg = l1(3, unpen=(0,))
        assert_allclose(prox(reg, [0.3, 0.3, -2.0], 1.0), [0.3, 0.0, -1.0])

    def test_zero_lambda_identity(self, rng):
        x = rng.standard_normal(6)
        assert_array_equal(prox(l1(6, 0.0), x, 3.0), x)
        assert_array_equal(prox(one_group(6, 0.0), x, 3.0), x)

    def test_dimension_mismatch(self):
        with pytest.raises(StructureError):
            prox(l1(3), [1.0, 2.0], 1.0)

    @settings(max_examples=100, deadline=None)
    @given(arrays(float, 6, elements=finite), arrays(float, 6, elements=finite),
           st.sampled_from([L1, GROUP_L2]), st.floats(0.01, 5))
    def test_nonexpansive(self, x, y, kind, nu):
        reg = random_regularizer(np.random.default_rng(0), 6, kind, 0.7, n_unpen=1)
        assert np.linalg.norm(prox(reg, x, nu) - prox(reg, y, nu)) <= np.linalg.norm(x - y) * (1 + 1e-12) + 1e-12

    @pytest.mark.parametrize("kind", [L1, GROUP_L2])
    def test_moreau_optimality(self, rng, kind):
        # prox(x) minimizes nu*g(u) + ||u - x||^2 / 2; compare with random perturbations
        reg = random_regularizer(rng, 8, kind, 0.8, n_unpen=1)
        nu = 1.3
        for _ in range(5):
            x = 2 * rng.standard_normal(8)
            p = prox(reg, x, nu)

            def obj(u):
                return nu * reg.value(u) + 0.5 * np.sum((u - x) ** 2)

            base = obj(p)
            for _ in range(100):
                d = rng.standard_normal(8) * 10.0 ** rng.uniform(-6, 0)
                assert base <= obj(p + d) + 1e-12


class TestProxJacobian:
    def test_l1_diag_with_boundary_zero(self):
        V = prox_jacobian(l1(3), [2.0, -0.5, 1.0], 1.0)
        assert_array_equal(materialize(V), np.diag([1.0, 0.0, 0.0]))

    def test_group_shrink_block(self):
        V = prox_jacobian(one_group(2), [0.0, 2.0], 1.0)
        assert_allclose(materialize(V), [[0.5, 0.0], [0.0, 1.0]], atol=1e-15)

    def test_group_zero_block(self):
        V = prox_jacobian(one_group(2), [0.0, 2.0], 3.0)
        assert V.blocks == ()
        assert_array_equal(materialize(V), np.zeros((2, 2)))

    def test_group_boundary_is_zero(self):
        V = prox_jacobian(one_group(2), [3.0, 4.0], 5.0)
        assert_array_equal(materialize(V), np.zeros((2, 2)))

    def test_unpenalized_identity(self):
        V = prox_jacobian(l1(1, unpen=(0,)), [0.0], 1.0)
        assert_array_equal(materialize(V), [[1.0]])

    def test_apply_examples(self):
        assert_allclose(apply_jacobian(ProxJacobian(2, np.array([1.0, 0.0])), [3.0, 4.0]), [3.0, 0.0])
        assert_array_equal(apply_jacobian(ProxJacobian.zero(2), [3.0, 4.0]), [0.0, 0.0])
        blk = ShrinkBlock(np.array([0, 1]), np.array([0.0, 2.0]), 1.0)
        V = ProxJacobian(2, np.zeros(2), (blk,))
        assert_allclose(apply_jacobian(V, [2.0, 2.0]), [1.0, 2.0])

    def test_materialize_diag(self):
        assert_array_equal(materialize(ProxJacobian(2, np.array([1.0, 0.0]))), [[1.0, 0.0], [0.0, 0.0]])

    def test_materialize_matches_basis_application(self):
        blk = ShrinkBlock(np.array([0, 1]), np.array([0.0, 2.0]), 1.0)
        V = ProxJacobian(2, np.zeros(2), (blk,))
        cols = np.column_stack([apply_jacobian(V, e) for e in np.eye(2)])
        assert_allclose(materialize(V), cols, rtol=0, atol=1e-15)
        assert_allclose(materialize(V), [[0.5, 0.0], [0.0, 1.0]])

    def test_dimension_mismatch(self):
        with pytest.raises(StructureError):
            prox_jacobian(l1(3), [1.0], 1.0)
        with pytest.raises(StructureError):
            apply_jacobian(ProxJacobian.identity(3), [1.0, 2.0])

    def test_size_one_group_matches_l1(self, rng):
        u = rng.standard_normal(5)
        g = Regularizer(GROUP_L2, 0.6, GroupStructure(5, tuple((i,) for i in range(5))))
        assert_allclose(prox(g, u, 1.0), prox(l1(5, 0.6), u, 1.0))
        assert_allclose(materialize(prox_jacobian(g, u, 1.0)), materialize(prox_jacobian(l1(5, 0.6), u, 1.0)))

    @settings(max_examples=100, deadline=None)
    @given(arrays(float, 7, elements=finite), st.sampled_from([L1, GROUP_L2]), st.floats(0.05, 10),
           st.integers(0, 10**6))
    def test_symmetric_psd_nonexpansive(self, u, kind, nu, seed):
        reg = random_regularizer(np.random.default_rng(seed), 7, kind, 0.9, n_unpen=seed % 2)
        M = materialize(prox_jacobian(reg, u, nu))
        assert_allclose(M, M.T, atol=1e-15)
        ev = np.linalg.eigvalsh(M)
        assert ev.min() >= -1e-12
        assert ev.max() <= 1 + 1e-10

    @settings(max_examples=50, deadline=None)
    @given(arrays(float, 7, elements=finite), arrays(float, 7, elements=finite),
           st.sampled_from([L1, GROUP_L2]), st.integers(0, 10**6))
    def test_apply_matches_dense(self, u, v, kind, seed):
        reg = random_regularizer(np.random.default_rng(seed), 7, kind, 0.9)
        V = prox_jacobian(reg, u, 1.0)
        dense = materialize(V) @ v
        assert np.linalg.norm(apply_jacobian(V, v) - dense) <= 1e-14 * max(np.linalg.norm(dense), 1.0)

    @pytest.mark.parametrize("kind", [L1, GROUP_L2])
    def test_directional_consistency(self, rng, kind):
        # first-order agreement away from the threshold boundaries
        reg = random_regularizer(rng, 10, kind, 1.0, n_unpen=1)
        nu = 1.0
        checked = 0
        while checked < 20:
            u = 2 * rng.standard_normal(10)
            if kind == L1:
                margin = np.abs(np.abs(u[1:]) - nu).min()
            else:
                margin = min(abs(np.linalg.norm(u[list(g)]) - nu) for g in reg.structure.groups)
            if margin < 1e-3:
                continue
            V = prox_jacobian(reg, u, nu)
            errs = []
            for scale in (1e-2, 1e-4, 1e-6):
                h = rng.standard_normal(10)
                h *= scale / np.linalg.norm(h)
                errs.append(np.linalg.norm(prox(reg, u + h, nu) - prox(reg, u, nu) - apply_jacobian(V, h)) / scale)
            assert errs[-1] <= 1e-6
            checked += 1
