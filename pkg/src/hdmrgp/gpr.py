"""Exact Gaussian process regression on an additive subset kernel.

Training builds the jittered Gram matrix, Cholesky-factorizes it, and solves
for the coefficient vector; prediction evaluates cross-covariances against
the stored training inputs.  The explicit matrix inverse never appears here
(the test suite keeps one as an independent oracle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import get_lapack_funcs, solve_triangular

from .data import Scaler, identity_scaler
from .hdmr import HdmrKernelSpec, kernel_matrix

_LOG_2PI = math.log(2.0 * math.pi)


class TrainingError(RuntimeError):
    """Gram factorization failed (matrix not positive definite).

    ``pivot`` is the 1-based order of the leading minor that failed; raising
    the diagonal jitter delta usually fixes the problem.
    """

    def __init__(self, message: str, pivot: Optional[int] = None):
        super().__init__(message)
        self.pivot = pivot


@dataclass
class TrainedModel:
    """Everything needed to predict: scaled training data, factor, coefficients.

    ``X`` and ``f`` are in scaled space; ``scaler`` maps between original and
    scaled units.  ``chol`` is the lower Cholesky factor of the Gram matrix
    with ``delta`` added to the diagonal, and ``coef`` solves
    (K + delta I) coef = f.
    """

    X: np.ndarray
    f: np.ndarray
    spec: HdmrKernelSpec
    delta: float
    chol: np.ndarray
    coef: np.ndarray
    scaler: Scaler
    log_ml: float

    @property
    def n_train(self) -> int:
        return self.X.shape[0]


def build_gram(spec: HdmrKernelSpec, X: np.ndarray, delta: float) -> np.ndarray:
    """Symmetric M x M kernel matrix with ``delta`` added to the diagonal."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != spec.dim:
        raise ValueError(f"X has shape {X.shape}, expected (M, {spec.dim})")
    if X.shape[0] < 1:
        raise ValueError("need at least one training point")
    delta = float(delta)
    if not (math.isfinite(delta) and delta >= 0.0):
        raise ValueError(f"delta must be a finite nonnegative real, got {delta!r}")
    gram = kernel_matrix(spec, X, X, symmetric=True)
    if delta > 0.0:
        gram[np.diag_indices_from(gram)] += delta
    return gram


def _cholesky_in_place(gram: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, reusing the Gram buffer; raises TrainingError."""
    potrf, = get_lapack_funcs(("potrf",), (gram,))
    chol, info = potrf(gram, lower=True, clean=True, overwrite_a=True)
    if info != 0:
        raise TrainingError(
            f"Gram matrix is not positive definite (leading minor {info}); increase delta",
            pivot=int(info),
        )
    return chol


def train(
    spec: HdmrKernelSpec,
    X: np.ndarray,
    f: np.ndarray,
    delta: float,
    scaler: Optional[Scaler] = None,
) -> TrainedModel:
    """Fit the exact GP: factorize K + delta I and solve for the coefficients.

    ``X`` and ``f`` must already be in scaled space (pass the fitted scaler so
    predictions can return original units; defaults to the identity).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    f = np.ascontiguousarray(f, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("cannot train on an empty dataset (M = 0)")
    if f.shape != (X.shape[0],):
        raise ValueError(f"f has shape {f.shape}, expected ({X.shape[0]},)")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite entries")
    if not np.all(np.isfinite(f)):
        raise ValueError("f contains non-finite entries")
    if scaler is None:
        scaler = identity_scaler(X.shape[1])

    gram = build_gram(spec, X, delta)
    chol = _cholesky_in_place(gram)
    half = solve_triangular(chol, f, lower=True, check_finite=False)
    coef = solve_triangular(chol, half, lower=True, trans="T", check_finite=False)
    log_ml = (
        -0.5 * float(f @ coef)
        - float(np.sum(np.log(np.diag(chol))))
        - 0.5 * X.shape[0] * _LOG_2PI
    )
    return TrainedModel(
        X=X,
        f=f,
        spec=spec,
        delta=float(delta),
        chol=chol,
        coef=coef,
        scaler=scaler,
        log_ml=log_ml,
    )


def _query_array(model: TrainedModel, x) -> tuple[np.ndarray, bool]:
    xq = np.asarray(x, dtype=np.float64)
    single = xq.ndim == 1
    xq = np.atleast_2d(xq)
    if xq.ndim != 2 or xq.shape[1] != model.spec.dim:
        raise ValueError(f"query has shape {np.shape(x)}, expected (n, {model.spec.dim})")
    return xq, single


def _query_blocks(n_queries: int, n_train: int, target_entries: int = 8_000_000):
    rows = max(1, target_entries // max(1, n_train))
    for i0 in range(0, n_queries, rows):
        yield i0, min(i0 + rows, n_queries)


def predict_mean(model: TrainedModel, x):
    """Predictive mean at query point(s) in original units.

    Accepts a single point of shape (D,) or a batch (n, D); queries are in
    original units and are scaled with the model's scaler internally.
    """
    xq, single = _query_array(model, x)
    xs = model.scaler.transform_x(xq)
    out = np.empty(xs.shape[0])
    for i0, i1 in _query_blocks(xs.shape[0], model.n_train):
        cross = kernel_matrix(model.spec, xs[i0:i1], model.X)
        out[i0:i1] = cross @ model.coef
    out = model.scaler.inverse_y(out)
    return float(out[0]) if single else out


def predict_mean_scaled(model: TrainedModel, xs_scaled: np.ndarray) -> np.ndarray:
    """Predictive mean in scaled-target units for already-scaled queries."""
    xs = np.atleast_2d(np.asarray(xs_scaled, dtype=np.float64))
    out = np.empty(xs.shape[0])
    for i0, i1 in _query_blocks(xs.shape[0], model.n_train):
        cross = kernel_matrix(model.spec, xs[i0:i1], model.X)
        out[i0:i1] = cross @ model.coef
    return out


def predict_variance(model: TrainedModel, x):
    """Predictive variance at query point(s), in scaled-target units.

    Clamped at zero; far from all data it tends to k(x, x) = sum of the
    term amplitudes.  Multiply by the squared target scale factor to express
    it in original units.
    """
    xq, single = _query_array(model, x)
    xs = model.scaler.transform_x(xq)
    kss = model.spec.self_covariance
    out = np.empty(xs.shape[0])
    for i0, i1 in _query_blocks(xs.shape[0], model.n_train):
        cross = kernel_matrix(model.spec, xs[i0:i1], model.X)
        v = solve_triangular(model.chol, cross.T, lower=True, check_finite=False)
        out[i0:i1] = kss - np.einsum("ij,ij->j", v, v)
    np.maximum(out, 0.0, out=out)
    return float(out[0]) if single else out


def log_marginal_likelihood(model: TrainedModel) -> float:
    """The log marginal likelihood stored at training time."""
    return model.log_ml


def training_residual(model: TrainedModel) -> float:
    """Max-norm of (K + delta I) coef - f, recomputed from the stored factor."""
    recon = model.chol @ (model.chol.T @ model.coef)
    return float(np.max(np.abs(recon - model.f)))


def train_rmse(model: TrainedModel) -> float:
    """Training-set RMSE in original units, with delta kept in the predictor.

    At a training point the predictive mean is the kernel row times coef,
    i.e. (K + delta I) coef - delta coef = f - delta coef, so no Gram matrix
    rebuild is needed.
    """
    mean_scaled = model.f - model.delta * model.coef
    pred = model.scaler.inverse_y(mean_scaled)
    truth = model.scaler.inverse_y(model.f)
    diff = pred - truth
    return float(np.sqrt(np.mean(diff * diff)))
