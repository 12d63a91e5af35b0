import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import FIGURE_SHAPLEY_K, FIGURE_X, depth1_model, random_corpus
from xtree.baselines import (
    boxminus,
    boxplus,
    condition_estimate,
    linear_treeshap,
    linear_treeshap_v1,
    ominus,
    oplus,
    treeshap_k,
)
from xtree.model import InputError
from xtree.oracle import build_table, exact_probabilistic_value, shapley_omega
from xtree.synthgen import SynthSpec, generate

# depth-sized TreeShap-K (the published form) degrades quickly, so the
# oracle-agreement corpus stays genuinely shallow
SHALLOW = dict(count=14, max_features=8, max_depth=6, seed=77)


def shallow_corpus():
    return random_corpus(**SHALLOW)


class TestOperators:
    @settings(deadline=None, max_examples=30)
    @given(xi=arrays(np.float64, 5, elements=st.floats(-1, 1)),
           g=st.floats(0.1, 5.0))
    def test_oplus_ominus_roundtrip(self, xi, g):
        xi = np.asarray(xi)
        xi[-1] = 0.0  # degree-(M-1) vectors leave the top slot empty
        forward = oplus(xi, g)
        np.testing.assert_allclose(ominus(forward, g), xi, atol=1e-12)

    def test_oplus_ominus_roundtrip_gamma2(self):
        rng = np.random.default_rng(0)
        xi = rng.uniform(-1, 1, 6)
        xi[-1] = 0.0
        np.testing.assert_allclose(ominus(oplus(xi, 2.0), 2.0), xi, atol=1e-12)

    @settings(deadline=None, max_examples=30)
    @given(d=arrays(np.float64, 6, elements=st.floats(-1, 1)),
           g=st.floats(-0.9, 4.0))
    def test_boxplus_boxminus_roundtrip(self, d, g):
        d = np.asarray(d)
        forward = boxplus(d, g)
        np.testing.assert_allclose(boxminus(forward, g), d, atol=1e-10)

    def test_boxplus_identity_at_gamma_one(self):
        # gamma = 1 means shift 0: introducing a null player changes nothing
        rng = np.random.default_rng(1)
        d = rng.uniform(-1, 1, 7)
        np.testing.assert_array_equal(boxplus(d, 0.0), d)


class TestShallowAgreement:
    def test_linear_treeshap_all_modes_match_oracle(self):
        for model, x in shallow_corpus():
            table = build_table(model, x)
            expected = exact_probabilistic_value(table, shapley_omega(model.n_features))
            for mode in ("fixed", "mitigated", "wellcond"):
                np.testing.assert_allclose(linear_treeshap(model, x, mode), expected,
                                           atol=1e-8, err_msg=mode)

    def test_treeshap_k_matches_oracle(self):
        for model, x in shallow_corpus():
            table = build_table(model, x)
            expected = exact_probabilistic_value(table, shapley_omega(model.n_features))
            np.testing.assert_allclose(treeshap_k(model, x), expected, atol=1e-8)

    def test_v1_matches_oracle(self):
        for model, x in shallow_corpus():
            table = build_table(model, x)
            expected = exact_probabilistic_value(table, shapley_omega(model.n_features))
            np.testing.assert_allclose(linear_treeshap_v1(model, x), expected, atol=1e-8)

    def test_depth1_exact_in_all_algorithms(self):
        model = depth1_model(left_value=0.9, right_value=0.1, left_cover=30,
                             right_cover=70)
        x = np.array([0.9])  # routes right
        expected = 0.1 - (30 * 0.9 + 70 * 0.1) / 100
        for fn in (lambda: linear_treeshap(model, x, "fixed"),
                   lambda: linear_treeshap(model, x, "mitigated"),
                   lambda: linear_treeshap(model, x, "wellcond"),
                   lambda: treeshap_k(model, x),
                   lambda: linear_treeshap_v1(model, x)):
            assert fn()[0] == pytest.approx(expected, abs=1e-12)

    def test_figure_value(self, figure_model):
        for mode in ("fixed", "mitigated", "wellcond"):
            phi = linear_treeshap(figure_model, FIGURE_X, mode)
            assert phi[2] == pytest.approx(FIGURE_SHAPLEY_K, abs=1e-10)
        assert treeshap_k(figure_model, FIGURE_X)[2] == pytest.approx(
            FIGURE_SHAPLEY_K, abs=1e-10)
        assert linear_treeshap_v1(figure_model, FIGURE_X)[2] == pytest.approx(
            FIGURE_SHAPLEY_K, abs=1e-10)

    def test_unknown_mode_rejected(self, figure_model):
        with pytest.raises(InputError):
            linear_treeshap(figure_model, FIGURE_X, "bogus")


class TestInstability:
    def test_error_growth_recorded(self):
        # fixed-degree mode and the coefficient calculi lose accuracy with
        # depth on chains; the wellcond swap tracks the treeprob basis
        errs_fixed, errs_well = [], []
        for d in (10, 30, 50):
            model, x = generate(SynthSpec(n_features=11, depth=d, shape="chain",
                                          seed=2025))
            table = build_table(model, x)
            expected = exact_probabilistic_value(table, shapley_omega(11))
            errs_fixed.append(np.max(np.abs(linear_treeshap(model, x, "fixed") - expected)))
            errs_well.append(np.max(np.abs(linear_treeshap(model, x, "wellcond") - expected)))
        assert errs_fixed[-1] > errs_fixed[0]
        assert errs_fixed[-1] > 1e-4          # deep chains are garbage
        assert max(errs_well) < 1e-8          # unity nodes stay accurate

    def test_treeshap_k_deep_chain_unstable(self):
        model, x = generate(SynthSpec(n_features=11, depth=40, shape="chain", seed=2025))
        table = build_table(model, x)
        expected = exact_probabilistic_value(table, shapley_omega(11))
        err = np.max(np.abs(treeshap_k(model, x) - expected))
        assert err >= 1e-4


class TestConditionEstimate:
    def test_unity_is_one(self):
        for d in (2, 5, 20, 64):
            assert condition_estimate("unity-V", d) == pytest.approx(1.0, abs=1e-6)

    def test_chebyshev_d20_large(self):
        assert condition_estimate("chebyshev-V", 20) > 1e5

    def test_chebyshev_grows(self):
        c5 = condition_estimate("chebyshev-V", 5)
        c12 = condition_estimate("chebyshev-V", 12)
        c20 = condition_estimate("chebyshev-V", 20)
        assert c5 < c12 < c20

    def test_oplus_solve_gamma0_modest(self):
        for d in (4, 12, 40):
            kappa = condition_estimate("oplus-solve", d, gamma=0.0)
            assert np.isfinite(kappa)
            assert kappa < (d + 1) ** 2

    def test_oplus_solve_gamma1_explodes(self):
        assert condition_estimate("oplus-solve", 21, gamma=1.0) > 1e5

    def test_boxplus_solve_gamma1_is_identity(self):
        assert condition_estimate("boxplus-solve", 30, gamma=1.0) == pytest.approx(
            1.0, abs=1e-6)

    def test_gamma_required(self):
        with pytest.raises(InputError):
            condition_estimate("oplus-solve", 10)

    def test_unknown_operator(self):
        with pytest.raises(InputError):
            condition_estimate("lu", 10)
