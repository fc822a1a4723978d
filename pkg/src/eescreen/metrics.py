"""Censoring-adjusted prediction metrics and estimation error.

All discrimination metrics reweight observed events by inverse
probability-of-censoring weights from the Kaplan-Meier curve of the
censoring distribution, so they estimate the quantities one would compute
on fully observed failure times. Risk scores follow the convention that a
larger score means higher risk, hence earlier failure; the horizon-model
probability passed to the quadratic score is the predicted chance of
surviving past the horizon.
"""

from __future__ import annotations

import numpy as np

from .data import SurvivalSample
from .errors import DataValidationError, NoComparablePairsError
from .kaplan_meier import (
    LEFT_LIMIT,
    RIGHT_LIMIT,
    ClampCounter,
    censoring_weights,
    km_censoring,
)


def _check_scores(scores, n, name):
    arr = np.asarray(scores, dtype=np.float64)
    if arr.shape != (n,):
        raise DataValidationError(f"{name} must have one value per observation")
    if not np.all(np.isfinite(arr)):
        raise DataValidationError(f"{name} must be finite")
    return arr


def brier(
    pi: np.ndarray,
    s: SurvivalSample,
    t0: float,
    censoring_weight_side: str = LEFT_LIMIT,
    counter: ClampCounter | None = None,
) -> float:
    """Quadratic score of survive-past-t0 probabilities under censoring.

    Units observed to fail by t0 contribute the squared predicted survival
    probability, weighted by 1 over the censoring survival just before
    their failure; units still under observation at t0 contribute the
    squared shortfall from 1, weighted by 1 over the censoring survival at
    t0. Censored-early units carry no direct term; the weights compensate.
    """
    pi = _check_scores(pi, s.y.shape[0], "probabilities")
    if np.any(pi < 0) or np.any(pi > 1):
        raise DataValidationError("probabilities must lie in [0, 1]")
    if not t0 > 0:
        raise DataValidationError("t0 must be positive")
    counter = counter if counter is not None else ClampCounter()
    sc = km_censoring(s)
    failed = (s.y <= t0) & (s.delta == 1)
    alive = s.y >= t0
    w_event = np.zeros(s.y.shape[0])
    w_event[failed] = censoring_weights(sc, s.y[failed], censoring_weight_side, counter=counter)
    sc_t0 = counter.apply(np.asarray(sc.evaluate(t0, RIGHT_LIMIT)))
    terms = pi**2 * w_event + (1.0 - pi) ** 2 / sc_t0 * alive
    return float(np.mean(terms))


def ipcw_auc(
    scores: np.ndarray,
    s: SurvivalSample,
    t0: float,
    censoring_weight_side: str = LEFT_LIMIT,
    counter: ClampCounter | None = None,
) -> float:
    """Probability that a failure by t0 outranks a survivor past t0.

    Cases are units with an observed event by t0, weighted by 1 over the
    censoring survival just before their event time; comparators are units
    observed beyond t0, whose common weight cancels. Tied scores earn half
    credit. Raises when either group is empty.
    """
    scores = _check_scores(scores, s.y.shape[0], "scores")
    counter = counter if counter is not None else ClampCounter()
    sc = km_censoring(s)
    case = (s.y <= t0) & (s.delta == 1)
    control = s.y >= t0
    if not np.any(case) or not np.any(control):
        raise NoComparablePairsError("no case-control pairs straddle the horizon")
    w = censoring_weights(sc, s.y[case], censoring_weight_side, counter=counter)
    diff = scores[case][:, None] - scores[control][None, :]
    credit = (diff > 0) + 0.5 * (diff == 0)
    return float((w @ credit).sum() / (w.sum() * credit.shape[1]))


def c_statistic(
    scores: np.ndarray,
    s: SurvivalSample,
    tau: float | None = None,
    censoring_weight_side: str = LEFT_LIMIT,
    counter: ClampCounter | None = None,
) -> float:
    """Censoring-adjusted concordance between risk scores and failure order.

    Over ordered pairs where the first unit has an observed event before
    both the second unit's time and the cutoff tau, counts pairs the score
    also orders first-before-second, with half credit for tied scores. Each
    pair is weighted by 1 over the squared censoring survival just before
    the earlier event. tau defaults to the 90th percentile of observed
    times.
    """
    scores = _check_scores(scores, s.y.shape[0], "scores")
    if tau is None:
        tau = float(np.quantile(s.y, 0.9))
    counter = counter if counter is not None else ClampCounter()
    sc = km_censoring(s)
    usable = (s.delta == 1) & (s.y < tau)
    w_i = np.zeros(s.y.shape[0])
    w_i[usable] = censoring_weights(
        sc, s.y[usable], censoring_weight_side, power=2, counter=counter
    )
    earlier = s.y[:, None] < s.y[None, :]
    weight = w_i[:, None] * earlier
    total = weight.sum()
    if total <= 0:
        raise NoComparablePairsError("no usable event pairs before the cutoff")
    diff = scores[:, None] - scores[None, :]
    credit = (diff > 0) + 0.5 * (diff == 0)
    return float((weight * credit).sum() / total)


def mse(beta_hat: dict, truth) -> float:
    """Squared estimation error over the union of estimated and true support."""
    beta0 = getattr(truth, "beta0", truth)
    if not isinstance(beta0, dict):
        raise DataValidationError("truth must be a coefficient dict or carry one")
    total = 0.0
    for j in set(beta_hat) | set(beta0):
        total += (float(beta_hat.get(j, 0.0)) - float(beta0.get(j, 0.0))) ** 2
    return total
