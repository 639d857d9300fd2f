"""Unit tests for the scikit-learn estimator facade."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from hdmrgp import gpr
from hdmrgp.data import Dataset, fit_scaler
from hdmrgp.estimator import HdmrGPRegressor
from hdmrgp.hdmr import uniform_spec
from hdmrgp.kernels import BaseKernel


def make_data(seed=0, m=120, dim=3):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(m, dim))
    y = np.sin(2.0 * np.pi * X[:, 0]) + X[:, 1] ** 2 + 0.05 * rng.standard_normal(m)
    return X, y


class TestSklearnProtocol:
    def test_get_set_params_roundtrip(self):
        est = HdmrGPRegressor(order=2, length_scale=0.7, delta=1e-5)
        params = est.get_params()
        assert params["order"] == 2
        assert params["length_scale"] == 0.7
        est.set_params(order=3)
        assert est.order == 3

    def test_clone(self):
        est = HdmrGPRegressor(order=2, kernel="matern32", random_state=5)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_not_fitted_raises(self):
        with pytest.raises(NotFittedError):
            HdmrGPRegressor().predict(np.zeros((2, 3)))

    def test_fit_returns_self_and_sets_attributes(self):
        X, y = make_data()
        est = HdmrGPRegressor(order=1, delta=1e-6)
        assert est.fit(X, y) is est
        assert est.n_features_in_ == 3
        assert hasattr(est, "model_")
        assert np.isfinite(est.log_marginal_likelihood_)

    def test_feature_count_mismatch(self):
        X, y = make_data()
        est = HdmrGPRegressor(order=1).fit(X, y)
        with pytest.raises(ValueError, match="features"):
            est.predict(np.zeros((2, 5)))

    def test_score_high_on_clean_data(self):
        X, y = make_data(seed=1)
        est = HdmrGPRegressor(order=2, length_scale=0.8, delta=1e-6).fit(X, y)
        assert est.score(X, y) > 0.99


class TestPrediction:
    def test_matches_functional_core(self):
        X, y = make_data(seed=2)
        est = HdmrGPRegressor(order=2, length_scale=0.9, delta=1e-6, scaling="minmax")
        est.fit(X, y)

        dataset = Dataset(X, y)
        scaler = fit_scaler(dataset, "minmax")
        spec = uniform_spec(3, 2, BaseKernel("se", 0.9))
        model = gpr.train(spec, scaler.transform_x(X), scaler.transform_y(y), 1e-6, scaler)

        rng = np.random.default_rng(3)
        queries = rng.uniform(size=(10, 3))
        np.testing.assert_array_equal(est.predict(queries), gpr.predict_mean(model, queries))

    def test_return_var(self):
        X, y = make_data(seed=4)
        est = HdmrGPRegressor(order=1, delta=1e-4).fit(X, y)
        mean, var = est.predict(X[:5], return_var=True)
        assert mean.shape == (5,) and var.shape == (5,)
        assert np.all(var >= 0.0)
        assert est.variance_scale_factor_ > 0.0

    def test_scaling_none_uses_raw_coordinates(self):
        X, y = make_data(seed=5)
        est = HdmrGPRegressor(order=1, scaling="none", delta=1e-6).fit(X, y)
        assert est.scaler_.kind == "identity"
        pred = est.predict(X)
        assert np.max(np.abs(pred - y)) < 0.2

    def test_explicit_amplitudes(self):
        X, y = make_data(seed=6)
        est = HdmrGPRegressor(order=1, amplitudes=[0.5, 0.25, 0.25], delta=1e-6)
        est.fit(X, y)
        assert [t.amplitude for t in est.spec_.terms] == [0.5, 0.25, 0.25]

    def test_random_amplitudes_seeded(self):
        X, y = make_data(seed=7)
        a = HdmrGPRegressor(order=1, amplitudes="random", random_state=1).fit(X, y)
        b = HdmrGPRegressor(order=1, amplitudes="random", random_state=1).fit(X, y)
        assert [t.amplitude for t in a.spec_.terms] == [t.amplitude for t in b.spec_.terms]

    def test_explicit_terms(self):
        X, y = make_data(seed=8)
        terms = [
            {"subset": [0], "amplitude": 0.6, "family": "se", "length": 0.8},
            {"subset": [1, 2], "amplitude": 0.4, "family": "matern32", "length": 1.1},
        ]
        est = HdmrGPRegressor(terms=terms, delta=1e-6).fit(X, y)
        assert est.spec_.n_terms == 2
        assert est.spec_.terms[1].kernel.family == "matern32"

    def test_wrong_amplitude_count(self):
        X, y = make_data(seed=9)
        est = HdmrGPRegressor(order=1, amplitudes=[0.5, 0.5])
        with pytest.raises(ValueError, match="amplitudes"):
            est.fit(X, y)


class TestOptimizeIntegration:
    def test_shared_optimization_improves_likelihood(self):
        X, y = make_data(seed=10, m=100)
        fixed = HdmrGPRegressor(order=1, length_scale=5.0, delta=1e-4).fit(X, y)
        tuned = HdmrGPRegressor(
            order=1, length_scale=5.0, delta=1e-4, optimize="shared", budget=40,
            random_state=0,
        ).fit(X, y)
        assert tuned.log_marginal_likelihood() >= fixed.log_marginal_likelihood()
        assert tuned.optimization_ is not None


class TestSaveLoad:
    def test_roundtrip(self, tmp_path):
        X, y = make_data(seed=11)
        est = HdmrGPRegressor(order=2, length_scale=0.7, delta=1e-6, scaling="zscore")
        est.fit(X, y)
        path = tmp_path / "model.npz"
        est.save(path)
        back = HdmrGPRegressor.load(path)
        rng = np.random.default_rng(12)
        queries = rng.uniform(size=(8, 3))
        np.testing.assert_array_equal(back.predict(queries), est.predict(queries))
        assert back.component_report().entries == est.component_report().entries


class TestComponents:
    def test_component_access(self):
        X, y = make_data(seed=13)
        est = HdmrGPRegressor(order=1, delta=1e-6).fit(X, y)
        report = est.component_report()
        assert len(report.entries) == 3
        values = est.component_values(X[:4], (0,))
        assert values.shape == (4,)


def test_sklearn_estimator_compliance():
    from sklearn.utils.estimator_checks import check_estimator

    est = HdmrGPRegressor(order=1, delta=1e-4, scaling="none")
    results = check_estimator(est, on_fail=None)
    failures = [r for r in results if r.get("status") not in ("passed", "skipped")]
    assert failures == []
