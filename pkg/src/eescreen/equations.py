"""Five estimating-equation models behind a single interface.

Each model provides an optimized screening statistic vector |U_j(0)| (or
|U_j(eta)| when an intercept nuisance is fitted first), and, where the model
supports full evaluation, the complete vector U(beta) used by the stagewise
booster. Every screening fast path reduces to one matrix-vector product
X'w with a model-specific per-unit weight vector w built in O(n log n), so
screening costs O(n log n + n p) regardless of the model's nominal pair-sum
structure. The brute-force pair sums survive as oracles in the test suite.

Model kinds
-----------
linear
    Least-squares score X'(Y - X beta); at zero this is X'Y.
cox_score
    Partial-likelihood score at zero: for each event, the covariate minus
    the at-risk average. Screening only; no full evaluation.
t_year
    Logistic model for surviving past a horizon t0, with the survival
    indicator reweighted by 1/S_C(t0) to undo censoring.
aft_gehan
    Rank-based (Gehan) score for the log-linear failure-time model,
    a pair-average over residual orderings among events.
model_free_si
    Single-index screening statistic: pair-average of covariates against
    outcome-rank comparisons, events reweighted by 1/S_C(Y-)^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .data import CovariateMatrix, SurvivalSample
from .errors import (
    DataValidationError,
    DegenerateOutcomeError,
    NonPositiveTimeError,
    UnsupportedModelError,
)
from .kaplan_meier import (
    LEFT_LIMIT,
    RIGHT_LIMIT,
    ClampCounter,
    StepFunction,
    censoring_weights,
    km_censoring,
)

MODEL_KINDS = ("linear", "cox_score", "t_year", "aft_gehan", "model_free_si")

#: Models for which the full vector U(beta) is implemented.
FULL_EVALUATION_KINDS = ("linear", "t_year", "aft_gehan")

#: Linear predictors are capped at this magnitude before the logistic link.
ETA_CAP = 30.0

_PROB_CLAMP = 1e-6


@dataclass(frozen=True)
class ModelSpec:
    """Choice of estimating equation plus its fixed hyperparameters."""

    kind: str
    t0: float | None = None
    censoring_weight_side: str = LEFT_LIMIT

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise UnsupportedModelError(f"unknown model kind {self.kind!r}")
        if self.kind == "t_year":
            if self.t0 is None or not self.t0 > 0:
                raise DataValidationError("t_year model requires t0 > 0")
        if self.censoring_weight_side not in (LEFT_LIMIT, RIGHT_LIMIT):
            raise DataValidationError("censoring_weight_side must be left_limit or right_limit")

    @property
    def supports_full_evaluation(self) -> bool:
        return self.kind in FULL_EVALUATION_KINDS


@dataclass(frozen=True)
class ScreeningStatVector:
    """Per-covariate screening statistics |U_j| plus bookkeeping."""

    stats: np.ndarray
    model: ModelSpec
    nuisance: float | None = None
    clamp_count: int = 0

    def __post_init__(self):
        stats = np.asarray(self.stats, dtype=np.float64)
        object.__setattr__(self, "stats", stats)
        if stats.ndim != 1:
            raise DataValidationError("stats must be a 1-d vector")
        if np.any(stats < 0) or not np.all(np.isfinite(stats)):
            raise DataValidationError("stats must be finite and nonnegative")

    @property
    def p(self) -> int:
        return self.stats.shape[0]


def _require_standardized(x: CovariateMatrix):
    if not x.standardized:
        raise DataValidationError("covariates must be standardized first")


def _as_survival(outcome) -> SurvivalSample:
    if not isinstance(outcome, SurvivalSample):
        raise DataValidationError("this model requires a SurvivalSample outcome")
    return outcome


def _as_response(outcome) -> np.ndarray:
    """Uncensored numeric response for the linear model."""
    if isinstance(outcome, SurvivalSample):
        if np.any(outcome.delta == 0):
            raise DataValidationError("linear model requires fully observed responses")
        return outcome.y
    arr = np.asarray(outcome, dtype=np.float64)
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise DataValidationError("responses must be a finite 1-d vector")
    return arr


def linear_predictor(x: CovariateMatrix, beta: dict) -> np.ndarray:
    """X beta over the nonzero coordinates only (cost O(n * nnz))."""
    eta = np.zeros(x.n)
    for j, b in beta.items():
        if b != 0.0:
            eta += b * x.values[:, j]
    return eta


def _check_t0(model: ModelSpec, s: SurvivalSample, sc: StepFunction):
    t0 = model.t0
    if t0 > float(np.max(s.y)):
        raise DataValidationError(f"t0={t0} lies beyond the largest observed time")
    if sc.evaluate(t0, RIGHT_LIMIT) <= 0.0:
        raise DataValidationError(f"censoring survival is zero at t0={t0}")


def _tyear_pseudo_response(model: ModelSpec, s: SurvivalSample) -> np.ndarray:
    """I(Y >= t0) / S_C(t0), the censoring-corrected survival indicator."""
    sc = km_censoring(s)
    _check_t0(model, s, sc)
    sc_t0 = sc.evaluate(model.t0, RIGHT_LIMIT)
    return (s.y >= model.t0).astype(np.float64) / sc_t0


def fit_nuisance(model: ModelSpec, s: SurvivalSample) -> float:
    """Intercept of the horizon model, fitted with no covariates.

    Solves the intercept-only equation exactly: the logistic intercept whose
    implied probability equals the censoring-corrected survivor fraction,
    clamped away from 0 and 1.
    """
    if model.kind != "t_year":
        raise UnsupportedModelError(f"model {model.kind!r} has no intercept nuisance")
    r = _tyear_pseudo_response(model, s)
    pibar = float(np.clip(np.mean(r), _PROB_CLAMP, 1.0 - _PROB_CLAMP))
    return float(logit(pibar))


def _ranks_and_counts(values: np.ndarray):
    """Sorted copy plus tie-aware threshold counts used by the rank models."""
    sorted_vals = np.sort(values)
    n = values.shape[0]
    geq = n - np.searchsorted(sorted_vals, values, side="left")  # #{k: v_k >= v_i}
    gt = n - np.searchsorted(sorted_vals, values, side="right")  # #{k: v_k > v_i}
    return sorted_vals, geq, gt


def _gehan_weights(e: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Per-unit weights w with U(beta) = n^-2 X'w for the Gehan score.

    Expanding the pair sum over (X_k - X_i) I(e_i <= e_k) delta_i gives
    w_k = #{events i: e_i <= e_k} minus, for events, the count of residuals
    at or above their own.
    """
    _, geq, _ = _ranks_and_counts(e)
    event_e = np.sort(e[delta == 1])
    a = np.searchsorted(event_e, e, side="right").astype(np.float64)
    return a - delta * geq


def _cox_weights(s: SurvivalSample) -> np.ndarray:
    """Per-unit weights w with U(0) = X'w for the partial-likelihood score.

    Each event contributes its own covariate minus the average over the risk
    set at its time; regrouping by the covariate owner turns the risk-set
    averages into a cumulative sum over event times.
    """
    y, delta = s.y, s.delta
    n = y.shape[0]
    sorted_y = np.sort(y)
    event_y = np.sort(y[delta == 1])
    risk_at_event = (n - np.searchsorted(sorted_y, event_y, side="left")).astype(np.float64)
    prefix = np.concatenate(([0.0], np.cumsum(1.0 / risk_at_event)))
    b = prefix[np.searchsorted(event_y, y, side="right")]
    return delta - b


def _model_free_weights(model: ModelSpec, outcome, counter: ClampCounter) -> np.ndarray:
    """Per-unit weights w with U(0) = n^-2 X'w for the single-index statistic.

    The pair sum over X_i delta_i I(Y_i < Y_k) / S_C^2 collapses to each
    unit's covariate times its event weight times the count of strictly
    larger outcomes.
    """
    if isinstance(outcome, SurvivalSample):
        y, delta = outcome.y, outcome.delta
        sc = km_censoring(outcome)
        # Weights are only evaluated at event times; censored units carry
        # weight zero, so they must not contribute to the clamp count.
        weighted = np.zeros(y.shape[0])
        events = delta == 1
        weighted[events] = censoring_weights(
            sc, y[events], model.censoring_weight_side, power=2, counter=counter
        )
    else:
        y = np.asarray(outcome, dtype=np.float64)
        if y.ndim != 1 or not np.all(np.isfinite(y)):
            raise DataValidationError("responses must be a finite 1-d vector")
        weighted = np.ones(y.shape[0])
    _, _, gt = _ranks_and_counts(y)
    return weighted * gt


def evaluate_full(model: ModelSpec, x: CovariateMatrix, outcome, beta: dict) -> np.ndarray:
    """Full estimating-equation vector U(beta), one entry per covariate.

    Only the linear, t_year, and aft_gehan models support evaluation away
    from zero; the other two exist purely as screening statistics. The
    pair-sum models are evaluated through their sort-based reduction, so one
    call costs O(n log n + n p + n * nnz(beta)).
    """
    _require_standardized(x)
    if not model.supports_full_evaluation:
        raise UnsupportedModelError(f"model {model.kind!r} supports screening only")
    n = x.n

    if model.kind == "linear":
        y = _as_response(outcome)
        residual = y - linear_predictor(x, beta)
        return x.values.T @ residual

    if model.kind == "t_year":
        s = _as_survival(outcome)
        r = _tyear_pseudo_response(model, s)
        eta = np.clip(linear_predictor(x, beta), -ETA_CAP, ETA_CAP)
        # The logistic link's derivative cancels its variance function, so
        # the score weight is identically 1 and only the residual remains.
        return (x.values.T @ (r - expit(eta))) / n

    s = _as_survival(outcome)
    if np.any(s.y <= 0):
        raise NonPositiveTimeError("aft_gehan requires strictly positive times")
    e = np.log(s.y) - linear_predictor(x, beta)
    w = _gehan_weights(e, s.delta)
    return (x.values.T @ w) / (n * n)


def screening_stats(model: ModelSpec, x: CovariateMatrix, outcome) -> ScreeningStatVector:
    """Per-covariate screening statistics |U_j| at the null parameter.

    For the t_year model the intercept nuisance is fitted first and the
    statistic is evaluated there; for centered covariates this equals the
    evaluation at zero up to rounding.
    """
    _require_standardized(x)
    n = x.n
    counter = ClampCounter()
    nuisance = None

    if model.kind == "linear":
        u = x.values.T @ _as_response(outcome)
    elif model.kind == "cox_score":
        u = x.values.T @ _cox_weights(_as_survival(outcome))
    elif model.kind == "t_year":
        s = _as_survival(outcome)
        r = _tyear_pseudo_response(model, s)
        above = s.y >= model.t0
        if np.all(above) or not np.any(above):
            raise DegenerateOutcomeError(
                f"every unit falls on the same side of t0={model.t0}; all statistics vanish"
            )
        nuisance = fit_nuisance(model, s)
        u = (x.values.T @ (r - expit(nuisance))) / n
    elif model.kind == "aft_gehan":
        s = _as_survival(outcome)
        if np.any(s.y <= 0):
            raise NonPositiveTimeError("aft_gehan requires strictly positive times")
        w = _gehan_weights(np.log(s.y), s.delta)
        u = (x.values.T @ w) / (n * n)
    else:
        w = _model_free_weights(model, outcome, counter)
        u = (x.values.T @ w) / (n * n)

    return ScreeningStatVector(np.abs(u), model, nuisance=nuisance, clamp_count=counter.count)


def gehan_loss(x: CovariateMatrix, s: SurvivalSample, beta: dict) -> float:
    """Rank-based loss whose quasiderivative is the negated Gehan score.

    The average over pairs of the positive part of residual gaps, with the
    earlier residual required to be an event. Computed by sorting residuals
    once: each event term is the sum of residuals at or above it minus its
    own residual times the count.
    """
    _require_standardized(x)
    if np.any(s.y <= 0):
        raise NonPositiveTimeError("gehan loss requires strictly positive times")
    n = x.n
    e = np.log(s.y) - linear_predictor(x, beta)
    sorted_e, geq, _ = _ranks_and_counts(e)
    suffix = np.concatenate(([0.0], np.cumsum(sorted_e[::-1])))[::-1]
    # Sum of residuals >= e_i, tie-inclusive: suffix starting at first index >= e_i.
    start = np.searchsorted(sorted_e, e, side="left")
    events = s.delta == 1
    total = float(np.sum(suffix[start[events]] - geq[events] * e[events]))
    return max(total / (n * n), 0.0)


def zhu_omega_stats(x: CovariateMatrix, s, counter: ClampCounter | None = None) -> np.ndarray:
    """Squared-average single-index screening statistic, one value per column.

    For each unit k the inner average covaries covariates with the indicator
    of outcomes strictly below Y_k (events IPCW-weighted); the statistic is
    the average of the squared inner averages. The square blocks the full
    pair-sum interchange, so inner averages are accumulated as prefix sums
    over the outcome order, costing O(n log n + n p).
    """
    _require_standardized(x)
    counter = counter if counter is not None else ClampCounter()
    n = x.n
    if isinstance(s, SurvivalSample):
        y = s.y
        sc = km_censoring(s)
        v = np.zeros(n)
        events = s.delta == 1
        v[events] = censoring_weights(sc, y[events], LEFT_LIMIT, power=2, counter=counter)
    else:
        y = np.asarray(s, dtype=np.float64)
        v = np.ones(n)
    order = np.argsort(y, kind="stable")
    weighted = x.values[order, :] * v[order][:, None]
    prefix = np.concatenate((np.zeros((1, x.p)), np.cumsum(weighted, axis=0)))
    uniq, starts, counts = np.unique(y[order], return_index=True, return_counts=True)
    inner = prefix[starts] / n  # inner average just below each distinct outcome
    omega = (counts[:, None] * inner**2).sum(axis=0) / n
    return omega
