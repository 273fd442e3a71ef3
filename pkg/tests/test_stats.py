import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import binomtest

from mdrml import specfun
from mdrml.errors import DataError
from mdrml.stats import (
    DEGENERATE,
    MCNEMAR_CHI2,
    MCNEMAR_EXACT,
    PAIRED_T,
    InsufficientFoldsError,
    binomial_two_sided_p,
    discordant_pairs,
    matrix_csv,
    mcnemar,
    mcnemar_from_counts,
    paired_t,
    significance_matrix,
)


def chi2_pdf(x, k):
    return math.exp((k / 2 - 1) * math.log(x) - x / 2 - (k / 2) * math.log(2) - math.lgamma(k / 2))


def chi2_sf_oracle(x, k):
    # integrate the density on [0, x] (substituting u = sqrt(x) removes the df=1 singularity)
    if x <= 0:
        return 1.0
    head = integrate.quad(lambda u: 2 * u * chi2_pdf(u * u, k), 0, math.sqrt(x),
                          epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    tail = integrate.quad(lambda v: chi2_pdf(v, k), x, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return tail if tail < 0.5 else 1.0 - head


def t_pdf(t, df):
    return math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
                    - (df + 1) / 2 * math.log1p(t * t / df))


def t_two_sided_oracle(t, df):
    t = abs(t)
    tail = integrate.quad(lambda v: t_pdf(v, df), t, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return min(1.0, 2 * tail)


class TestSpecialFunctions:
    @pytest.mark.parametrize("x", [0.01, 0.5, 1.0, 3.841, 7.84, 15.0, 40.0])
    @pytest.mark.parametrize("df", [1, 2, 5, 10])
    def test_chi2_against_quadrature(self, x, df):
        assert abs(specfun.chi2_sf(x, df) - chi2_sf_oracle(x, df)) <= 1e-6
        assert specfun.chi2_sf(x, df) + specfun.chi2_cdf(x, df) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 2.776, 5.0, 11.18, -3.0])
    @pytest.mark.parametrize("df", [1, 4, 9, 30])
    def test_t_against_quadrature(self, t, df):
        assert abs(specfun.t_two_sided_p(t, df) - t_two_sided_oracle(t, df)) <= 1e-6

    def test_t_cdf_symmetry(self):
        for t in (0.5, 1.7, 4.0):
            assert specfun.t_cdf(t, 7) + specfun.t_cdf(-t, 7) == pytest.approx(1.0, abs=1e-14)

    def test_chi2_critical_value(self):
        assert specfun.chi2_sf(3.841458820694124, 1) == pytest.approx(0.05, abs=1e-9)

    def test_gamma_edges(self):
        assert specfun.gammainc_lower(2.0, 0.0) == 0.0
        assert specfun.gammainc_upper(2.0, 0.0) == 1.0
        with pytest.raises(ValueError):
            specfun.gammainc_lower(0.0, 1.0)

    @given(st.floats(0.1, 30), st.floats(0.1, 30), st.floats(1e-6, 1 - 1e-6))
    def test_beta_reflection(self, a, b, x):
        assert specfun.betainc(a, b, x) + specfun.betainc(b, a, 1 - x) == pytest.approx(1.0, abs=1e-10)


class TestMcNemar:
    def test_fixture_b5_c20(self):
        r = mcnemar_from_counts(5, 20)
        assert r.method == MCNEMAR_CHI2 and r.statistic == pytest.approx(7.84, abs=1e-12)
        assert r.p_value < 0.05 and r.significant_at_05
        assert abs(r.p_value - chi2_sf_oracle(7.84, 1)) <= 1e-6

    @pytest.mark.parametrize("b,c", [(0, 25), (10, 15), (30, 45), (100, 60), (12, 13)])
    def test_chi2_branch_against_quadrature(self, b, c):
        r = mcnemar_from_counts(b, c)
        stat = (abs(b - c) - 1) ** 2 / (b + c)
        assert r.method == MCNEMAR_CHI2 and abs(r.p_value - chi2_sf_oracle(stat, 1)) <= 1e-6

    @given(st.integers(0, 24), st.integers(0, 24))
    def test_exact_branch(self, b, c):
        if not 0 < b + c < 25:
            return
        r = mcnemar_from_counts(b, c)
        assert r.method == MCNEMAR_EXACT
        assert abs(r.p_value - binomtest(b, b + c, 0.5).pvalue) <= 1e-6

    @given(st.integers(1, 200))
    def test_equal_counts_never_significant(self, b):
        r = mcnemar_from_counts(b, b)
        assert not r.significant_at_05
        if 2 * b >= 25:
            assert r.statistic == pytest.approx(1 / (2 * b))

    def test_identical_predictions(self):
        y = np.array([0, 1, 1, 0])
        r = mcnemar(y, y, y)
        assert r.method == DEGENERATE and r.p_value == 1.0

    @given(st.integers(0, 60), st.integers(0, 60))
    def test_symmetric(self, b, c):
        assert mcnemar_from_counts(b, c).p_value == mcnemar_from_counts(c, b).p_value

    @settings(max_examples=30)
    @given(st.integers(25, 150), st.data())
    def test_branches_agree_when_unbalanced(self, n, data):
        b = data.draw(st.integers(0, n))
        if b == n - b:
            return
        exact = binomial_two_sided_p(min(b, n - b), n)
        assert abs(exact - mcnemar_from_counts(b, n - b).p_value) <= 0.01

    def test_discordant_counts(self):
        y = np.array([1, 1, 0, 0, 1])
        a = np.array([1, 0, 0, 1, 1])
        b = np.array([0, 1, 0, 1, 1])
        pairs = discordant_pairs(y, a, b)
        assert (pairs.b, pairs.c, pairs.n_concordant) == (1, 1, 3)

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            discordant_pairs([0, 1], [0, 1, 1], [0, 1])


class TestPairedT:
    def test_fixture(self):
        a = np.array([0.92, 0.93, 0.925, 0.92, 0.93])
        r = paired_t(a, a - np.array([0.02, 0.03, 0.025, 0.02, 0.03]))
        assert r.method == PAIRED_T and r.statistic == pytest.approx(11.18, abs=0.01)
        assert r.p_value < 0.001
        assert abs(r.p_value - t_two_sided_oracle(r.statistic, 4)) <= 1e-6

    @given(st.lists(st.floats(-1, 1), min_size=2, max_size=12), st.integers(0, 2**32 - 1))
    def test_against_quadrature(self, a, seed):
        a = np.array(a)
        b = a + np.random.default_rng(seed).normal(0, 0.1, a.size)
        r = paired_t(a, b)
        if r.method == PAIRED_T and r.statistic is not None:
            assert abs(r.p_value - t_two_sided_oracle(r.statistic, a.size - 1)) <= 1e-6

    def test_identical(self):
        r = paired_t([0.8, 0.9], [0.8, 0.9])
        assert r.p_value == 1.0 and not r.significant_at_05

    def test_constant_difference(self):
        r = paired_t([0.8, 0.9, 0.7], [0.7, 0.8, 0.6])
        assert r.method == DEGENERATE

    def test_too_few_folds(self):
        with pytest.raises(InsufficientFoldsError):
            paired_t([0.5], [0.4])


def test_significance_matrix():
    y = np.array([0, 1, 1, 0, 1, 0])
    preds = {"a": y, "b": 1 - y, "c": y}
    m = significance_matrix(y, preds, fold_f1={"a": [0.9, 0.8], "b": [0.5, 0.6], "c": [0.9, 0.8]},
                            fold_auc={"a": [0.9, float("nan"), 0.7], "b": [0.5, 0.6, 0.2],
                                      "c": [0.9, 0.8, 0.7]})
    assert [(r["model_a"], r["model_b"]) for r in m["pairs"]] == [("a", "b"), ("a", "c"), ("b", "c")]
    ab = m["pairs"][0]
    assert (ab["b"], ab["c"]) == (6, 0) and ab["mcnemar"]["p_value"] == pytest.approx(2 / 64)
    assert "paired_t_auc" in ab
    lines = matrix_csv(m).splitlines()
    assert len(lines) == 4 and lines[0].startswith("model_a,model_b,b,c")
