"""Gaussian process regression with additive kernels over variable subsets.

The kernel is a sum of low-dimensional Matern-family terms, one per variable
subset, so a single exact GP fit yields an additive decomposition of the
fitted function, per-component relevance scores, and predictive variances.
"""

from .analysis import ComponentEntry, ComponentReport, component_report, component_value
from .data import (
    Dataset,
    ParseError,
    Scaler,
    ScalingError,
    SplitSpec,
    fit_scaler,
    identity_scaler,
    load_csv,
    pearson_r,
    rmse,
    save_csv,
    split,
    synth_generate,
)
from .estimator import HdmrGPRegressor
from .gpr import (
    TrainedModel,
    TrainingError,
    build_gram,
    log_marginal_likelihood,
    predict_mean,
    predict_variance,
    train,
)
from .hdmr import (
    HdmrKernelSpec,
    HdmrTerm,
    all_subsets,
    eval_hdmr,
    eval_hdmr_fast,
    kernel_matrix,
    random_amplitude_spec,
    spec_from_term_list,
    uniform_spec,
)
from .hyperopt import OptimizationError, OptimizationResult, OptimizationSpec, optimize
from .kernels import FAMILIES, BaseKernel, eval_base, eval_on_subset
from .model_io import ModelFileError, load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "BaseKernel",
    "ComponentEntry",
    "ComponentReport",
    "Dataset",
    "FAMILIES",
    "HdmrGPRegressor",
    "HdmrKernelSpec",
    "HdmrTerm",
    "ModelFileError",
    "OptimizationError",
    "OptimizationResult",
    "OptimizationSpec",
    "ParseError",
    "Scaler",
    "ScalingError",
    "SplitSpec",
    "TrainedModel",
    "TrainingError",
    "all_subsets",
    "build_gram",
    "component_report",
    "component_value",
    "eval_base",
    "eval_hdmr",
    "eval_hdmr_fast",
    "eval_on_subset",
    "fit_scaler",
    "identity_scaler",
    "kernel_matrix",
    "load_csv",
    "load_model",
    "log_marginal_likelihood",
    "optimize",
    "pearson_r",
    "predict_mean",
    "predict_variance",
    "random_amplitude_spec",
    "rmse",
    "save_csv",
    "save_model",
    "spec_from_term_list",
    "split",
    "synth_generate",
    "train",
    "uniform_spec",
    "__version__",
]
