"""Unit tests for the additive decomposition and component ranking."""

import numpy as np
import pytest

from hdmrgp.analysis import component_report, component_value
from hdmrgp.data import Dataset, fit_scaler
from hdmrgp.gpr import predict_mean_scaled, train
from hdmrgp.hdmr import uniform_spec
from hdmrgp.kernels import BaseKernel


def fit_synthetic(seed=0, m=80, dim=4, order=1, length=0.8, delta=1e-6, target=None):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(m, dim))
    if target is None:
        target = lambda X: np.sin(2.0 * np.pi * X[:, 0]) + X[:, 2] ** 2
    y = target(X)
    dataset = Dataset(X, y)
    scaler = fit_scaler(dataset, "zscore")
    spec = uniform_spec(dim, order, BaseKernel("se", length))
    model = train(spec, scaler.transform_x(X), scaler.transform_y(y), delta, scaler)
    return model, X, y


class TestDecompositionIdentity:
    def test_components_sum_to_scaled_mean(self):
        model, X, _ = fit_synthetic(seed=1, m=60, dim=4, order=2)
        rng = np.random.default_rng(2)
        queries = rng.uniform(-0.2, 1.2, size=(50, 4))
        total = np.zeros(50)
        for term in model.spec.terms:
            total += component_value(model, term.subset, queries)
        mean_scaled = predict_mean_scaled(model, model.scaler.transform_x(queries))
        np.testing.assert_allclose(total, mean_scaled, atol=1e-12)

    def test_training_point_sum_excludes_jitter(self):
        model, X, _ = fit_synthetic(seed=3, m=50, dim=3, order=1, delta=1e-3)
        total = np.zeros(model.n_train)
        for term in model.spec.terms:
            total += component_value(model, term.subset, X)
        expect = model.f - model.delta * model.coef
        np.testing.assert_allclose(total, expect, atol=1e-10)

    def test_single_term_component_equals_scaled_mean(self):
        model, X, _ = fit_synthetic(seed=4, m=40, dim=3, order=3)
        assert model.spec.n_terms == 1
        rng = np.random.default_rng(5)
        queries = rng.uniform(size=(10, 3))
        comp = component_value(model, (0, 1, 2), queries)
        mean_scaled = predict_mean_scaled(model, model.scaler.transform_x(queries))
        np.testing.assert_array_equal(comp, mean_scaled)

    def test_subset_not_in_spec_rejected(self):
        model, _, _ = fit_synthetic(seed=6, m=30, dim=3, order=1)
        with pytest.raises(ValueError, match="not a term"):
            component_value(model, (0, 1), np.zeros(3))


class TestComponentReport:
    def test_relevant_components_dominate(self):
        model, _, _ = fit_synthetic(seed=7, m=300, dim=4, order=1)
        report = component_report(model)
        shares = {e.subset: e.share for e in report.entries}
        assert shares[(0,)] + shares[(2,)] > 0.95

    def test_target_depending_on_one_variable(self):
        model, _, _ = fit_synthetic(
            seed=8, m=200, dim=2, order=1, target=lambda X: np.sin(2.0 * np.pi * X[:, 0])
        )
        report = component_report(model)
        variances = {e.subset: e.variance for e in report.entries}
        assert variances[(1,)] < 0.01 * variances[(0,)]

    def test_dummy_variable_share_suppressed(self):
        model, _, _ = fit_synthetic(
            seed=9,
            m=250,
            dim=4,
            order=1,
            target=lambda X: np.sin(2.0 * np.pi * X[:, 0]) + np.cos(np.pi * X[:, 1]) + X[:, 2] ** 2,
        )
        report = component_report(model)
        shares = {e.subset: e.share for e in report.entries}
        assert shares[(3,)] < 0.02

    def test_shares_sum_to_one(self):
        model, _, _ = fit_synthetic(seed=10, m=100, dim=4, order=2)
        report = component_report(model)
        assert sum(e.share for e in report.entries) == pytest.approx(1.0, abs=1e-12)
        assert not report.degenerate

    def test_sorted_descending_with_lexicographic_ties(self):
        model, _, _ = fit_synthetic(seed=11, m=80, dim=4, order=1)
        report = component_report(model)
        variances = [e.variance for e in report.entries]
        assert variances == sorted(variances, reverse=True)
        for a, b in zip(report.entries, report.entries[1:]):
            if a.variance == b.variance:
                assert a.subset < b.subset

    def test_one_entry_per_term(self):
        model, _, _ = fit_synthetic(seed=12, m=60, dim=5, order=2)
        report = component_report(model)
        assert len(report.entries) == model.spec.n_terms
        assert {e.subset for e in report.entries} == {t.subset for t in model.spec.terms}

    def test_constant_target_is_degenerate(self):
        rng = np.random.default_rng(13)
        X = rng.uniform(size=(40, 3))
        y = np.full(40, 2.5)
        spec = uniform_spec(3, 1, BaseKernel("exp", 0.8))
        model = train(spec, X, y, 0.0)
        report = component_report(model)
        assert report.degenerate
        assert all(e.share == 0.0 for e in report.entries)

    def test_ranking_invariant_under_joint_rescaling(self):
        rng = np.random.default_rng(14)
        X = rng.uniform(size=(120, 4))
        y = np.sin(2.0 * np.pi * X[:, 0]) + 0.5 * X[:, 1] ** 2 + 0.1 * X[:, 3]
        delta = 1e-4
        spec = uniform_spec(4, 1, BaseKernel("se", 0.8))
        base = component_report(train(spec, X, y, delta))
        scaled = component_report(
            train(spec.with_amplitude_scale(1e3), X, y, 1e3 * delta)
        )
        assert [e.subset for e in base.entries] == [e.subset for e in scaled.entries]
        for a, b in zip(base.entries, scaled.entries):
            assert a.share == pytest.approx(b.share, rel=1e-6)

    def test_report_carries_lengths(self):
        model, _, _ = fit_synthetic(seed=15, m=50, dim=3, order=1, length=0.77)
        report = component_report(model)
        assert all(e.length == 0.77 for e in report.entries)
