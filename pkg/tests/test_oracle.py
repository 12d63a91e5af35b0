from fractions import Fraction

import numpy as np
import pytest

from conftest import FIGURE_BANZHAF_K, FIGURE_SHAPLEY_K, FIGURE_TABLE, FIGURE_X, random_corpus, single_leaf_model
from xtree.model import InputError, predict
from xtree.oracle import (
    banzhaf_omega,
    build_table,
    build_table_rational,
    exact_gradient,
    exact_probabilistic_value,
    exact_semivalue,
    exact_shapley_rational,
    semivalue_omega,
    shapley_omega,
)
from xtree.synthgen import SynthSpec, generate


class TestBuildTable:
    def test_figure_table(self, figure_model):
        table = build_table(figure_model, FIGURE_X)
        for mask, expected in FIGURE_TABLE.items():
            assert table[mask] == pytest.approx(expected, abs=1e-14)

    def test_full_mask_equals_predict(self):
        for model, x in random_corpus(6, seed=2):
            table = build_table(model, x)
            assert table[(1 << model.n_features) - 1] == pytest.approx(
                predict(model, x), abs=1e-12)

    def test_constant_tree_all_equal(self):
        model = single_leaf_model(value=0.4)
        table = build_table(model, np.array([0.0, 0.0]))
        assert np.all(table.values == table.values[0])

    def test_n_over_cap_rejected(self):
        model = single_leaf_model(n_features=25)
        with pytest.raises(InputError, match="cap"):
            build_table(model, np.zeros(25))

    def test_permutation_invariance(self):
        # f(S) is a routing property: relabeling the bitmask axis and the
        # feature indices together must give the same table
        model, x = generate(SynthSpec(n_features=4, depth=5, seed=9))
        table = build_table(model, x)
        rng = np.random.default_rng(1)
        perm = rng.permutation(4)
        from xtree.model import Ensemble, TreeModel
        t = model.trees[0]
        feature = t.feature.copy()
        internal = feature >= 0
        feature[internal] = perm[feature[internal]]
        remapped = Ensemble(4, 0.0, (TreeModel(
            t.left.copy(), t.right.copy(), feature, t.threshold.copy(),
            t.cover.copy(), t.value.copy()),))
        x2 = np.empty(4)
        x2[perm] = x
        table2 = build_table(remapped, x2)
        for mask in range(16):
            mask2 = 0
            for i in range(4):
                if mask >> i & 1:
                    mask2 |= 1 << perm[i]
            assert table2[mask2] == pytest.approx(table[mask], abs=1e-12)


class TestExactValues:
    def test_shapley_on_figure(self, figure_model):
        table = build_table(figure_model, FIGURE_X)
        phi = exact_probabilistic_value(table, shapley_omega(3))
        assert phi[2] == pytest.approx(FIGURE_SHAPLEY_K, abs=1e-12)

    def test_banzhaf_on_figure(self, figure_model):
        table = build_table(figure_model, FIGURE_X)
        phi = exact_probabilistic_value(table, banzhaf_omega(3))
        assert phi[2] == pytest.approx(FIGURE_BANZHAF_K, abs=1e-12)

    def test_leave_one_in_omega(self, figure_model):
        table = build_table(figure_model, FIGURE_X)
        omega = np.zeros(3)
        omega[0] = 1.0
        phi = exact_probabilistic_value(table, omega)
        for i in range(3):
            assert phi[i] == pytest.approx(table[1 << i] - table[0], abs=1e-12)

    def test_normalization_guard(self, figure_model):
        table = build_table(figure_model, FIGURE_X)
        with pytest.raises(InputError, match="normalization"):
            exact_probabilistic_value(table, np.full(3, 0.9))

    def test_efficiency_of_shapley(self):
        for model, x in random_corpus(8, seed=5):
            table = build_table(model, x)
            phi = exact_probabilistic_value(table, shapley_omega(model.n_features))
            assert phi.sum() == pytest.approx(
                table[(1 << model.n_features) - 1] - table[0], abs=1e-10)


class TestExactGradient:
    def test_half_point_is_banzhaf(self, figure_model):
        table = build_table(figure_model, FIGURE_X)
        g = exact_gradient(table, np.full(3, 0.5))
        assert g[2] == pytest.approx(FIGURE_BANZHAF_K, abs=1e-12)

    def test_vertex_gradient_is_discrete_derivative(self, figure_model):
        table = build_table(figure_model, FIGURE_X)
        z = np.array([1.0, 0.0, 0.0])     # vertex S = {0}
        g = exact_gradient(table, z)
        assert g[1] == pytest.approx(table[0b011] - table[0b001], abs=1e-12)
        assert g[2] == pytest.approx(table[0b101] - table[0b001], abs=1e-12)

    def test_multilinearity_in_each_coordinate(self, figure_model):
        # g_i is affine with zero slope in z_i: identical at three points
        table = build_table(figure_model, FIGURE_X)
        rng = np.random.default_rng(4)
        z = rng.uniform(0, 1, 3)
        for i in range(3):
            vals = []
            for zi in (0.1, 0.5, 0.9):
                z2 = z.copy()
                z2[i] = zi
                vals.append(exact_gradient(table, z2)[i])
            assert vals[0] == pytest.approx(vals[1], abs=1e-12)
            assert vals[1] == pytest.approx(vals[2], abs=1e-12)

    def test_affine_in_other_coordinates(self, figure_model):
        # along any other coordinate the gradient is affine: the value at
        # the midpoint of three collinear points is the endpoint average
        table = build_table(figure_model, FIGURE_X)
        z = np.array([0.3, 0.6, 0.4])
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                vals = []
                for zj in (0.2, 0.5, 0.8):
                    z2 = z.copy()
                    z2[j] = zj
                    vals.append(exact_gradient(table, z2)[i])
                assert vals[1] == pytest.approx((vals[0] + vals[2]) / 2, abs=1e-12)


class TestSemivalueOmega:
    def test_shapley_equals_beta11(self):
        for n in (2, 3, 6):
            np.testing.assert_allclose(semivalue_omega(n, "beta", 1, 1),
                                       shapley_omega(n), atol=1e-14)

    def test_beta11_n3_closed_form(self):
        np.testing.assert_allclose(semivalue_omega(3, "beta", 1, 1),
                                   [1 / 3, 1 / 6, 1 / 3], atol=1e-14)

    def test_dirac_n2(self):
        for nu in (0.0, 0.3, 1.0):
            np.testing.assert_allclose(semivalue_omega(2, "dirac", nu),
                                       [1 - nu, nu], atol=1e-14)

    def test_beta21_n2_exact_integrals(self):
        # density 2(1-t): omega_1 = 2 int (1-t)^2 = 2/3, omega_2 = 2 int t(1-t) = 1/3
        np.testing.assert_allclose(semivalue_omega(2, "beta", 2, 1),
                                   [2 / 3, 1 / 3], atol=1e-14)

    def test_normalization(self):
        import math
        for n in (2, 5, 9):
            for omega in (semivalue_omega(n, "dirac", 0.25),
                          semivalue_omega(n, "beta", 4, 1),
                          semivalue_omega(n, "beta", 1, 16)):
                total = sum(math.comb(n - 1, k) * omega[k] for k in range(n))
                assert total == pytest.approx(1.0, abs=1e-10)

    def test_exact_semivalue_matches_explicit(self, figure_model):
        table = build_table(figure_model, FIGURE_X)
        np.testing.assert_allclose(
            exact_semivalue(table, "dirac", 0.5),
            exact_probabilistic_value(table, banzhaf_omega(3)), atol=1e-14)


class TestRationalOracle:
    def test_table_matches_float(self, figure_model):
        table = build_table(figure_model, FIGURE_X)
        rat = build_table_rational(figure_model, FIGURE_X)
        for mask in range(8):
            assert float(rat[mask]) == pytest.approx(table[mask], abs=1e-14)

    def test_efficiency_holds_exactly(self, figure_model):
        phi = exact_shapley_rational(figure_model, FIGURE_X)
        rat = build_table_rational(figure_model, FIGURE_X)
        assert sum(phi, Fraction(0)) == rat[0b111] - rat[0b000]

    def test_cap(self):
        model = single_leaf_model(n_features=11)
        with pytest.raises(InputError, match="cap"):
            build_table_rational(model, np.zeros(11))
