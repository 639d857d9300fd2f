"""Scikit-learn estimator facade over the additive-kernel GP core.

Wraps scaling, kernel-spec construction, training, and optional
maximum-likelihood hyperparameter search behind the familiar
``fit`` / ``predict`` / ``get_params`` interface so the model composes with
pipelines and model selection utilities.
"""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import analysis, gpr, hyperopt, model_io
from .data import Dataset, fit_scaler, identity_scaler
from .hdmr import (
    HdmrKernelSpec,
    HdmrTerm,
    random_amplitude_spec,
    spec_from_term_list,
    uniform_spec,
)
from .kernels import BaseKernel


class HdmrGPRegressor(RegressorMixin, BaseEstimator):
    """Gaussian process regressor whose kernel is a sum of subset terms.

    Parameters
    ----------
    order : int
        Subset size d; the kernel sums one term per size-d subset of the
        input variables.  ``order`` equal to the input dimension gives a
        plain single-kernel GP.
    terms : list of dict, optional
        Explicit term list (keys ``subset``, ``amplitude``, ``family``,
        ``length``) overriding ``order`` / ``kernel`` / ``length_scale`` /
        ``amplitudes``; allows mixed subset sizes.
    kernel : str
        Base kernel family: "se", "exp", "matern32", or "matern52".
    length_scale : float
        Shared length scale in scaled coordinates.
    amplitudes : "uniform", "random", or array-like
        Per-term amplitude policy.  "uniform" sets every amplitude to 1/N;
        "random" draws log-uniform positive amplitudes (seeded by
        ``random_state``); an array gives explicit per-term values.
    delta : float
        Diagonal jitter, interpreted as Gaussian noise variance; fixed unless
        ``optimize_delta`` is set.
    scaling : str
        Input/target scaling: "zscore", "minmax", or "none".
    optimize : str
        "none" (fixed hyperparameters), "shared" (one length scale by maximum
        likelihood), or "per-term" (one length scale per kernel term).
    optimize_delta : bool
        Include delta in the likelihood search.
    length_bounds, delta_bounds : tuple of float
        Search bounds in natural units.
    budget : int
        Total objective evaluations allowed across restarts.
    restarts : int
        Number of simplex starts (the first is always the supplied
        hyperparameters).
    random_state : int, optional
        Seed for amplitude draws and optimizer restarts.
    """

    def __init__(
        self,
        order=1,
        terms=None,
        kernel="se",
        length_scale=1.0,
        amplitudes="uniform",
        delta=1e-6,
        scaling="zscore",
        optimize="none",
        optimize_delta=False,
        length_bounds=(1e-2, 1e2),
        delta_bounds=(1e-8, 1e-1),
        budget=200,
        restarts=1,
        random_state=None,
    ):
        self.order = order
        self.terms = terms
        self.kernel = kernel
        self.length_scale = length_scale
        self.amplitudes = amplitudes
        self.delta = delta
        self.scaling = scaling
        self.optimize = optimize
        self.optimize_delta = optimize_delta
        self.length_bounds = length_bounds
        self.delta_bounds = delta_bounds
        self.budget = budget
        self.restarts = restarts
        self.random_state = random_state

    def _build_spec(self, dim: int):
        if self.terms is not None:
            return spec_from_term_list(dim, self.terms)
        base = BaseKernel(self.kernel, self.length_scale)
        if isinstance(self.amplitudes, str):
            if self.amplitudes == "uniform":
                return uniform_spec(dim, self.order, base)
            if self.amplitudes == "random":
                seed = 0 if self.random_state is None else int(self.random_state)
                return random_amplitude_spec(dim, self.order, base, seed=seed)
            raise ValueError(
                f"amplitudes must be 'uniform', 'random', or an array, got {self.amplitudes!r}"
            )
        spec = uniform_spec(dim, self.order, base)
        amps = np.asarray(self.amplitudes, dtype=np.float64)
        if amps.shape != (spec.n_terms,):
            raise ValueError(f"expected {spec.n_terms} amplitudes, got shape {amps.shape}")
        return HdmrKernelSpec(
            dim,
            tuple(
                HdmrTerm(t.subset, float(a), t.kernel) for t, a in zip(spec.terms, amps)
            ),
        )

    def fit(self, X, y):
        """Fit the GP to ``X`` (n_samples, n_features) and targets ``y``."""
        X, y = check_X_y(X, y, y_numeric=True, dtype=np.float64)
        if not isinstance(self.order, numbers.Integral) or isinstance(self.order, bool):
            raise ValueError(f"order must be an integer, got {self.order!r}")
        self.n_features_in_ = X.shape[1]

        if self.scaling == "none":
            scaler = identity_scaler(X.shape[1])
        else:
            scaler = fit_scaler(Dataset(X, y), self.scaling)
        xs = scaler.transform_x(X)
        fs = scaler.transform_y(y)

        spec = self._build_spec(X.shape[1])
        if self.optimize == "none":
            model = gpr.train(spec, xs, fs, self.delta, scaler)
            self.optimization_ = None
        else:
            opt = hyperopt.OptimizationSpec(
                mode=self.optimize,
                optimize_delta=self.optimize_delta,
                length_bounds=tuple(self.length_bounds),
                delta_bounds=tuple(self.delta_bounds),
                budget=self.budget,
                restarts=self.restarts,
                seed=0 if self.random_state is None else int(self.random_state),
            )
            result = hyperopt.optimize(spec, xs, fs, self.delta, opt, scaler)
            model = result.model
            self.optimization_ = result

        self.scaler_ = scaler
        self.spec_ = model.spec
        self.model_ = model
        self.log_marginal_likelihood_ = model.log_ml
        return self

    def _check_query(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but {type(self).__name__} "
                f"is expecting {self.n_features_in_} features as input."
            )
        return X

    def predict(self, X, return_var=False):
        """Predictive mean in original target units.

        With ``return_var=True`` also return the predictive variance, which
        is expressed in scaled-target units (multiply by
        ``variance_scale_factor_`` for original units); it bounds the
        expectation value, not the fit error.
        """
        X = self._check_query(X)
        mean = gpr.predict_mean(self.model_, X)
        if not return_var:
            return mean
        return mean, gpr.predict_variance(self.model_, X)

    @property
    def variance_scale_factor_(self) -> float:
        check_is_fitted(self, "model_")
        return float(self.scaler_.y_scale) ** 2

    def log_marginal_likelihood(self) -> float:
        check_is_fitted(self, "model_")
        return self.model_.log_ml

    def component_report(self) -> analysis.ComponentReport:
        """Training-set variance ranking of the additive components."""
        check_is_fitted(self, "model_")
        return analysis.component_report(self.model_)

    def component_values(self, X, subset):
        """One component function at query points, in scaled-target units."""
        X = self._check_query(X)
        return analysis.component_value(self.model_, subset, X)

    def save(self, path) -> None:
        """Write the fitted model to a versioned, self-describing file."""
        check_is_fitted(self, "model_")
        model_io.save_model(self.model_, path)

    @classmethod
    def load(cls, path) -> "HdmrGPRegressor":
        """Reconstruct a fitted estimator from a model file."""
        model = model_io.load_model(path)
        orders = {len(t.subset) for t in model.spec.terms}
        est = cls(
            order=orders.pop() if len(orders) == 1 else 1,
            delta=model.delta,
            scaling=model.scaler.kind if model.scaler.kind != "identity" else "none",
        )
        est.n_features_in_ = model.spec.dim
        est.scaler_ = model.scaler
        est.spec_ = model.spec
        est.model_ = model
        est.log_marginal_likelihood_ = model.log_ml
        est.optimization_ = None
        return est
