"""Additive decomposition of a trained model and component relevance ranking.

Each kernel term induces one component function of the fitted model; the
components sum exactly to the (scaled) predictive mean.  Ranking components
by the variance of their values over the training set identifies which
variable subsets matter, analogous to automatic relevance determination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gpr import TrainedModel
from .hdmr import HdmrKernelSpec, HdmrTerm, kernel_matrix, validate_subset

#: The total prediction variance below this fraction of the summed component
#: variances marks a degenerate (essentially constant) fit.
_DEGENERATE_REL = 1e-12


@dataclass(frozen=True)
class ComponentEntry:
    subset: tuple[int, ...]
    variance: float
    share: float
    length: float


@dataclass(frozen=True)
class ComponentReport:
    """Per-term training-set variances, sorted descending (subset breaks ties).

    ``share`` is each variance as a fraction of the summed component
    variances.  When the fitted function is essentially constant over the
    training set (``degenerate`` is true), all shares are reported as zero.
    """

    entries: tuple[ComponentEntry, ...]
    total_variance: float
    degenerate: bool


def _term_spec(model: TrainedModel, term: HdmrTerm) -> HdmrKernelSpec:
    return HdmrKernelSpec(model.spec.dim, (term,))


def _find_term(model: TrainedModel, subset) -> HdmrTerm:
    idx = validate_subset(subset, model.spec.dim)
    for term in model.spec.terms:
        if term.subset == idx:
            return term
    raise ValueError(f"subset {idx} is not a term of the model's kernel")


def component_value(model: TrainedModel, subset, x):
    """One component function evaluated at query point(s), in scaled-target units.

    Queries are in original units (scaled internally).  Unscaling a single
    component is ill-posed because the target offset belongs to no single
    term, so values stay in scaled space; the scaler's affine parameters
    convert the full sum.
    """
    term = _find_term(model, subset)
    xq = np.asarray(x, dtype=np.float64)
    single = xq.ndim == 1
    xq = np.atleast_2d(xq)
    if xq.shape[1] != model.spec.dim:
        raise ValueError(f"query has shape {np.shape(x)}, expected (n, {model.spec.dim})")
    xs = model.scaler.transform_x(xq)
    cross = kernel_matrix(_term_spec(model, term), xs, model.X)
    out = cross @ model.coef
    return float(out[0]) if single else out


def component_training_values(model: TrainedModel, term: HdmrTerm) -> np.ndarray:
    """Component values at the training points (scaled-target units)."""
    gram = kernel_matrix(_term_spec(model, term), model.X, model.X, symmetric=True)
    return gram @ model.coef


def component_report(model: TrainedModel) -> ComponentReport:
    """Rank every kernel term by population variance of its component values.

    The variance uses the 1/M normalization.  The diagonal jitter is not part
    of any component, so the component values sum to f - delta * coef at the
    training points, not to f.
    """
    values = np.empty((len(model.spec.terms), model.n_train))
    for i, term in enumerate(model.spec.terms):
        values[i] = component_training_values(model, term)
    variances = values.var(axis=1)
    total = float(variances.sum())

    prediction_var = float(values.sum(axis=0).var())
    degenerate = total == 0.0 or prediction_var <= _DEGENERATE_REL * total
    if degenerate:
        shares = np.zeros_like(variances)
    else:
        shares = variances / total

    order = sorted(
        range(len(model.spec.terms)),
        key=lambda i: (-variances[i], model.spec.terms[i].subset),
    )
    entries = tuple(
        ComponentEntry(
            subset=model.spec.terms[i].subset,
            variance=float(variances[i]),
            share=float(shares[i]),
            length=model.spec.terms[i].kernel.length,
        )
        for i in order
    )
    return ComponentReport(entries=entries, total_variance=total, degenerate=degenerate)
