import math

import numpy as np
import pytest

from mdrml import classifiers
from mdrml.errors import ConfigError, NotFittedError
from mdrml.lime import (
    PerturbationConfig,
    condition_text,
    explain_instance,
    perturb,
    training_stats,
    weighted_ridge,
)
from mdrml.rng import make_rng


def binary_data(n=400, d=8, seed=0):
    return np.random.default_rng(seed).integers(0, 2, size=(n, d)).astype(float)


def linear_model(coef, intercept=0.3):
    coef = np.asarray(coef, dtype=float)
    return lambda X: intercept + np.asarray(X) @ coef


def wls(Z, y, w):
    """Closed-form weighted least squares with an intercept column."""
    A = np.c_[np.ones(len(Z)), Z] * np.sqrt(w)[:, None]
    sol = np.linalg.lstsq(A, y * np.sqrt(w), rcond=None)[0]
    return sol[1:], sol[0]


class TestPerturb:
    def test_row_zero_is_instance(self):
        X = binary_data()
        stats = training_stats(X, [f"f{j}" for j in range(8)])
        s, z, w = perturb(X[0], stats, PerturbationConfig(n_samples=200), make_rng(0, "t"))
        assert np.array_equal(s[0], X[0]) and np.all(z[0] == 1) and w[0] == 1.0

    def test_kernel_closed_form(self):
        X = binary_data(d=4)
        stats = training_stats(X, list("abcd"))
        cfg = PerturbationConfig(n_samples=2000)
        _, z, w = perturb(X[0], stats, cfg, make_rng(1, "t"))
        sigma = 0.75 * math.sqrt(4)
        far = np.flatnonzero(z.sum(axis=1) == 0)
        assert far.size > 0 and np.allclose(w[far], math.exp(-1.0 / sigma ** 2))
        dist = (4 - z.sum(axis=1)) / 4
        assert np.allclose(w, np.exp(-dist ** 2 / sigma ** 2))

    def test_numeric_feature_uses_quartile_bins(self):
        rng = np.random.default_rng(0)
        X = np.c_[rng.normal(size=500), rng.integers(0, 2, 500)]
        stats = training_stats(X, ["x", "b"])
        assert not stats.categorical[0] and stats.categorical[1]
        s, z, _ = perturb(X[0], stats, PerturbationConfig(n_samples=300), make_rng(0, "t"))
        q = stats.quartiles[0]
        same = np.searchsorted(q, s[:, 0]) == np.searchsorted(q, X[0, 0])
        assert np.array_equal(z[:, 0].astype(bool), same)

    def test_requires_stats(self):
        with pytest.raises(NotFittedError):
            perturb(np.zeros(3), None, PerturbationConfig(), make_rng(0))

    @pytest.mark.parametrize("cfg", [PerturbationConfig(n_samples=50), PerturbationConfig(kernel_width=0.0),
                                     PerturbationConfig(top_k=0), PerturbationConfig(top_k=9)])
    def test_config_validation(self, cfg):
        X = binary_data()
        stats = training_stats(X, [f"f{j}" for j in range(8)])
        with pytest.raises(ConfigError):
            explain_instance(linear_model(np.ones(8)), X[0], stats, cfg)


class TestExplain:
    def test_constant_model(self):
        X = binary_data()
        stats = training_stats(X, [f"f{j}" for j in range(8)])
        e = explain_instance(lambda A: np.full(len(A), 0.7), X[3], stats, PerturbationConfig(top_k=5))
        assert all(abs(w) <= 0.01 for _, _, w in e.entries)
        assert e.intercept == pytest.approx(0.7, abs=0.01)

    def test_entries_sorted_and_sized(self):
        X = binary_data()
        stats = training_stats(X, [f"f{j}" for j in range(8)])
        e = explain_instance(linear_model(np.arange(8) - 3.5), X[1], stats, PerturbationConfig(top_k=4))
        weights = [abs(w) for _, _, w in e.entries]
        assert len(e.entries) == 4 and weights == sorted(weights, reverse=True)

    def test_deterministic(self):
        X = binary_data()
        stats = training_stats(X, [f"f{j}" for j in range(8)])
        f = linear_model(np.linspace(-1, 1, 8))
        cfg = PerturbationConfig(n_samples=500, seed=3)
        assert explain_instance(f, X[2], stats, cfg, 7).to_dict() == explain_instance(f, X[2], stats, cfg, 7).to_dict()

    def test_linear_model_matches_wls_oracle(self):
        d = 8
        X = binary_data(d=d, seed=1)
        stats = training_stats(X, [f"f{j}" for j in range(d)])
        coef = np.array([0.4, -0.3, 0.25, -0.2, 0.15, 0.0, 0.05, -0.1])
        f = linear_model(coef)
        cfg = PerturbationConfig(n_samples=3000, top_k=d, seed=2)
        for i in range(10):
            x = X[i]
            e = explain_instance(f, x, stats, cfg, instance_id=i)
            _, z, w = perturb(x, stats, cfg, make_rng(cfg.seed, "lime", i))
            oracle, _ = wls(z, f(perturb(x, stats, cfg, make_rng(cfg.seed, "lime", i))[0]), w)
            got = e.weights()
            true = coef * (2 * x - 1)
            for j in range(d):
                assert got[f"f{j}"] == pytest.approx(oracle[j], abs=0.01)
                assert got[f"f{j}"] == pytest.approx(true[j], abs=0.01)
            assert e.score > 0.5

    def test_susceptible_profile_gets_non_positive_family_weights(self):
        rng = np.random.default_rng(0)
        fam = rng.integers(0, 2, size=(500, 7)).astype(float)
        X = np.c_[rng.integers(0, 3, size=(500, 3)).astype(float), fam]
        names = ["CIP", "SXT", "GEN"] + [f"family:{k}" for k in range(7)]
        stats = training_stats(X, names)
        model = lambda A: 1 / (1 + np.exp(-(2.0 * A[:, 3:].sum(axis=1) - 5.0)))  # noqa: E731
        instance = np.zeros(10)
        e = explain_instance(model, instance, stats, PerturbationConfig(top_k=10))
        assert all(w <= 0 for n, _, w in e.entries if n.startswith("family:"))

    def test_trained_model_accepted(self):
        X = binary_data(d=3)
        y = (X[:, 0] == 1).astype(int)
        m = classifiers.fit(classifiers.ClassifierSpec("logistic_regression"), X, y, feature_names=list("abc"))
        stats = training_stats(X, list("abc"))
        e = explain_instance(m, X[0], stats, PerturbationConfig(top_k=1, n_samples=300))
        assert e.entries[0][0] == "a"
        assert (e.entries[0][2] > 0) == (X[0, 0] == 1)


def test_condition_text():
    rng = np.random.default_rng(0)
    X = np.c_[np.arange(100.0), rng.integers(0, 3, 100)]
    stats = training_stats(X, ["age", "CIP"], value_labels={"CIP": {0.0: "S", 1.0: "I", 2.0: "R"}})
    assert condition_text(stats, 1, 2.0) == "CIP = R"
    assert condition_text(stats, 0, 5.0) == "age <= 24.75"
    assert condition_text(stats, 0, 99.0) == "age > 74.25"
    assert condition_text(stats, 0, 40.0) == "24.75 < age <= 49.5"


def test_weighted_ridge_zero_alpha_is_wls():
    rng = np.random.default_rng(0)
    Z = rng.integers(0, 2, size=(200, 4)).astype(float)
    y = Z @ [1.0, -2.0, 0.5, 0.0] + 0.3 + rng.normal(0, 0.01, 200)
    w = rng.uniform(0.1, 1, 200)
    coef, b = weighted_ridge(Z, y, w, 0.0)
    c2, b2 = wls(Z, y, w)
    assert np.allclose(coef, c2) and b == pytest.approx(b2)
