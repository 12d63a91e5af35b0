import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIGURE_SHAPLEY_K, FIGURE_X, depth1_model, random_corpus, two_tree_ensemble
from xtree.model import InputError, eval_conditional
from xtree.oracle import build_table, exact_probabilistic_value, shapley_omega
from xtree.quadrature import BetaParams, beta_const, beta_shapley, gauss_legendre, shapley


class TestGaussLegendre:
    def test_one_point_is_midpoint(self):
        rule = gauss_legendre(1)
        np.testing.assert_allclose(rule.nodes, [0.5], atol=1e-15)
        np.testing.assert_allclose(rule.weights, [1.0], atol=1e-15)

    def test_two_point_rule(self):
        rule = gauss_legendre(2)
        np.testing.assert_allclose(rule.nodes,
                                   [0.5 - 1 / (2 * math.sqrt(3)), 0.5 + 1 / (2 * math.sqrt(3))],
                                   atol=1e-15)
        np.testing.assert_allclose(rule.weights, [0.5, 0.5], atol=1e-15)
        for k in range(4):   # exact through degree 2n-1 = 3
            assert np.dot(rule.weights, rule.nodes ** k) == pytest.approx(
                1 / (k + 1), abs=1e-15)

    def test_five_point_integrates_t9(self):
        rule = gauss_legendre(5)
        assert np.dot(rule.weights, rule.nodes ** 9) == pytest.approx(0.1, abs=1e-13)

    @settings(deadline=None, max_examples=25)
    @given(n=st.integers(min_value=1, max_value=40))
    def test_rule_invariants(self, n):
        rule = gauss_legendre(n)
        assert rule.weights.sum() == pytest.approx(1.0, abs=1e-14)
        assert np.all(rule.weights > 0)
        assert np.all((rule.nodes > 0) & (rule.nodes < 1))
        assert np.all(np.diff(rule.nodes) > 0)
        for k in range(0, 2 * n, max(1, (2 * n) // 6)):
            assert np.dot(rule.weights, rule.nodes ** k) == pytest.approx(
                1 / (k + 1), abs=1e-13)

    def test_invalid_size(self):
        with pytest.raises(InputError):
            gauss_legendre(0)


class TestBetaParams:
    def test_validation(self):
        with pytest.raises(InputError):
            BetaParams(0, 1)
        with pytest.raises(InputError):
            BetaParams(1, -2)

    def test_beta_const(self):
        assert beta_const(1, 1) == pytest.approx(1.0)
        assert beta_const(2, 1) == pytest.approx(0.5)
        assert beta_const(2, 2) == pytest.approx(1 / 6)
        # log-gamma branch agrees with the factorial branch
        assert beta_const(12, 11) == pytest.approx(
            math.factorial(11) * math.factorial(10) / math.factorial(22), rel=1e-12)


class TestBetaShapley:
    def test_figure_shapley(self, figure_model):
        phi = shapley(figure_model, FIGURE_X)
        assert phi[2] == pytest.approx(FIGURE_SHAPLEY_K, abs=1e-12)

    def test_efficiency(self, figure_model):
        phi = shapley(figure_model, FIGURE_X)
        full = eval_conditional(figure_model, FIGURE_X, [0, 1, 2])
        empty = eval_conditional(figure_model, FIGURE_X, [])
        assert phi.sum() == pytest.approx(full - empty, abs=1e-10)

    def test_depth1_all_betas_coincide(self):
        model = depth1_model(left_value=1.0, right_value=0.0)
        x = np.array([0.2])
        for params in ((1, 1), (4, 1), (1, 16), (3, 2)):
            phi = beta_shapley(model, x, BetaParams(*params))
            assert phi[0] == pytest.approx(0.5, abs=1e-12)

    def test_scalar_and_vectorized_agree(self):
        for model, x in random_corpus(8, seed=31):
            for params in (BetaParams(1, 1), BetaParams(4, 1), BetaParams(1, 2)):
                a = beta_shapley(model, x, params, vectorized=True)
                b = beta_shapley(model, x, params, vectorized=False)
                np.testing.assert_allclose(a, b, atol=1e-12)

    def test_matches_oracle_across_parameters(self):
        from xtree.oracle import semivalue_omega
        for model, x in random_corpus(6, max_features=7, seed=17):
            table = build_table(model, x)
            n = model.n_features
            for a, b in ((1, 1), (2, 1), (1, 2), (4, 1), (1, 4)):
                expected = exact_probabilistic_value(table, semivalue_omega(n, "beta", a, b))
                got = beta_shapley(model, x, BetaParams(a, b))
                np.testing.assert_allclose(got, expected, atol=1e-10)

    def test_symmetric_semivalue_identity(self, figure_model):
        # replacing each gradient by its symmetrized version leaves the
        # Shapley value unchanged
        from xtree.gradient import tree_gradient
        from xtree.quadrature import _density_row
        n = 3
        d = figure_model.trees[0].depth
        m = min(d, n)
        rule = gauss_legendre(-(-m // 2))
        phi_sym = np.zeros(n)
        for t_l, k_l in zip(rule.nodes, rule.weights):
            g1 = tree_gradient(figure_model, FIGURE_X, np.full(n, t_l))
            g2 = tree_gradient(figure_model, FIGURE_X, np.full(n, 1.0 - t_l))
            phi_sym += k_l * 0.5 * (g1 + g2)
        np.testing.assert_allclose(phi_sym, shapley(figure_model, FIGURE_X), atol=1e-12)

    def test_ensemble_sums_per_tree(self, figure_model):
        double = two_tree_ensemble(figure_model)
        np.testing.assert_allclose(shapley(double, FIGURE_X),
                                   2 * shapley(figure_model, FIGURE_X), atol=1e-12)

    def test_single_leaf_zero(self):
        from conftest import single_leaf_model
        model = single_leaf_model()
        np.testing.assert_array_equal(shapley(model, np.zeros(2)), np.zeros(2))
