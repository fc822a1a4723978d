"""Screening and boosting for high-dimensional estimating equations.

The package ranks covariates by the magnitude of their estimating-equation
component at the null parameter, retains a small working set, and can then
grow sparse fits along a stagewise boosting path. It ships five concrete
equations (least squares, partial-likelihood score, horizon-survival
logistic, rank-based failure-time, and a model-free single-index
statistic), inverse-censoring-weighted prediction metrics, a reproducible
Monte-Carlo study harness, and a command-line interface.
"""

from .boost import (
    CoefficientPath,
    SelectionSequence,
    TunedCoefficients,
    eeboost,
    gcv_tune,
    ieescreen,
)
from .data import (
    CovariateMatrix,
    SurvivalSample,
    TrueModel,
    load_matrix,
    load_survival,
    save_matrix,
    save_survival,
    standardize,
)
from .equations import (
    ModelSpec,
    ScreeningStatVector,
    evaluate_full,
    fit_nuisance,
    gehan_loss,
    screening_stats,
    zhu_omega_stats,
)
from .errors import (
    DataValidationError,
    EEScreenError,
    NumericDegeneracyError,
    ReplicationError,
    UnsupportedModelError,
)
from .kaplan_meier import StepFunction, censoring_weights, km_censoring
from .metrics import brier, c_statistic, ipcw_auc, mse
from .screening import (
    FpFnCurve,
    RetainedSet,
    ScreenResult,
    default_model_size,
    eescreen,
    fp_fn_curve,
    marginal_screen_tyear,
    minimum_model_size,
    retain_threshold,
    retain_top_d,
)
from .simulate import (
    ExperimentResult,
    ScenarioConfig,
    calibrate_censoring,
    default_true_model,
    gen_covariates,
    gen_outcomes,
    prepare,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "CoefficientPath",
    "CovariateMatrix",
    "DataValidationError",
    "EEScreenError",
    "ExperimentResult",
    "FpFnCurve",
    "ModelSpec",
    "NumericDegeneracyError",
    "ReplicationError",
    "RetainedSet",
    "ScenarioConfig",
    "ScreenResult",
    "ScreeningStatVector",
    "SelectionSequence",
    "StepFunction",
    "SurvivalSample",
    "TrueModel",
    "TunedCoefficients",
    "UnsupportedModelError",
    "brier",
    "c_statistic",
    "calibrate_censoring",
    "censoring_weights",
    "default_model_size",
    "default_true_model",
    "eeboost",
    "eescreen",
    "evaluate_full",
    "fit_nuisance",
    "fp_fn_curve",
    "gcv_tune",
    "gehan_loss",
    "gen_covariates",
    "gen_outcomes",
    "ieescreen",
    "ipcw_auc",
    "km_censoring",
    "load_matrix",
    "load_survival",
    "marginal_screen_tyear",
    "minimum_model_size",
    "mse",
    "prepare",
    "retain_threshold",
    "retain_top_d",
    "run_experiment",
    "save_matrix",
    "save_survival",
    "screening_stats",
    "standardize",
    "zhu_omega_stats",
]
