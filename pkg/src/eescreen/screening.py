"""Sure-independence screening on estimating-equation statistics.

Covariates are ranked by the magnitude of their component of the estimating
equation at the null parameter, then retained either by count (the d
largest) or by threshold. Also provides the evaluation helpers used in the
simulation study (minimum model size, false-positive curves) and a slow
per-column Newton fit of marginal horizon models that serves as the
conventional marginal-screening baseline.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .data import CovariateMatrix, SurvivalSample, standardize
from .equations import (
    ModelSpec,
    ScreeningStatVector,
    _tyear_pseudo_response,
    screening_stats,
)
from .errors import DataValidationError


def rank_from_stats(stats: np.ndarray) -> np.ndarray:
    """Column indices ordered by decreasing statistic, ties to the lower index."""
    stats = np.asarray(stats, dtype=np.float64)
    return np.argsort(-stats, kind="stable")


def default_model_size(n: int) -> int:
    """Retention count floor(n / log n) used when no size is given."""
    if n < 2:
        raise DataValidationError("need at least two observations")
    return int(math.floor(n / math.log(n)))


@dataclass(frozen=True)
class RetainedSet:
    """Outcome of a retention rule applied to a statistic vector."""

    retained: np.ndarray  # column indices, decreasing statistic order
    stats: np.ndarray  # full p-vector of statistics
    rule: str

    def __post_init__(self):
        object.__setattr__(self, "retained", np.asarray(self.retained, dtype=np.int64))
        object.__setattr__(self, "stats", np.asarray(self.stats, dtype=np.float64))

    @property
    def size(self) -> int:
        return self.retained.shape[0]

    def contains(self, indices) -> bool:
        return set(int(i) for i in indices).issubset(int(i) for i in self.retained)


def retain_top_d(stats: np.ndarray, d: int) -> RetainedSet:
    """Keep the d columns with the largest statistics."""
    stats = np.asarray(stats, dtype=np.float64)
    if not 1 <= d <= stats.shape[0]:
        raise DataValidationError(f"d must lie in [1, {stats.shape[0]}], got {d}")
    order = rank_from_stats(stats)
    return RetainedSet(order[:d], stats, f"top_d={d}")


def retain_threshold(stats: np.ndarray, gamma: float) -> RetainedSet:
    """Keep every column whose statistic strictly exceeds gamma."""
    stats = np.asarray(stats, dtype=np.float64)
    if not gamma >= 0:
        raise DataValidationError(f"threshold must be nonnegative, got {gamma}")
    order = rank_from_stats(stats)
    keep = order[stats[order] > gamma]
    return RetainedSet(keep, stats, f"threshold={gamma}")


@dataclass(frozen=True)
class ScreenResult:
    """Statistics plus the retained covariate set."""

    stats: ScreeningStatVector
    retained: RetainedSet


def eescreen(
    model: ModelSpec,
    x: CovariateMatrix,
    outcome,
    d: int | None = None,
    gamma: float | None = None,
) -> ScreenResult:
    """Screen covariates for one model and apply a retention rule.

    Standardizes the covariates if they are not already standardized. With
    neither d nor gamma given, retains the default floor(n / log n)
    columns; giving both is an error.
    """
    if d is not None and gamma is not None:
        raise DataValidationError("give a retention count or a threshold, not both")
    if not x.standardized:
        x = standardize(x)
    vec = screening_stats(model, x, outcome)
    if gamma is not None:
        retained = retain_threshold(vec.stats, gamma)
    else:
        if d is None:
            d = min(default_model_size(x.n), x.p)
        retained = retain_top_d(vec.stats, d)
    return ScreenResult(vec, retained)


def _true_indices(truth) -> np.ndarray:
    indices = getattr(truth, "indices", truth)
    arr = np.asarray(sorted(int(i) for i in indices), dtype=np.int64)
    if arr.size == 0:
        raise DataValidationError("the true support is empty")
    if arr.size != np.unique(arr).size:
        raise DataValidationError("true support indices repeat")
    return arr


def minimum_model_size(stats: np.ndarray, truth) -> int:
    """Smallest retention count whose top set covers the whole true support.

    Equals the worst (largest) 1-based rank among the true columns.
    """
    stats = np.asarray(stats, dtype=np.float64)
    indices = _true_indices(truth)
    if indices[-1] >= stats.shape[0]:
        raise DataValidationError("true support index outside the statistic vector")
    rank_of = np.empty(stats.shape[0], dtype=np.int64)
    rank_of[rank_from_stats(stats)] = np.arange(1, stats.shape[0] + 1)
    return int(rank_of[indices].max())


@dataclass(frozen=True)
class FpFnCurve:
    """False positives needed at each tolerated false-negative count.

    Entry f gives the smallest retained-set size still covering all but f
    of the true columns, and the false positives that set carries.
    """

    fn_allowed: np.ndarray
    false_positives: np.ndarray
    model_sizes: np.ndarray


def fp_fn_curve(stats: np.ndarray, truth) -> FpFnCurve:
    stats = np.asarray(stats, dtype=np.float64)
    indices = _true_indices(truth)
    if indices[-1] >= stats.shape[0]:
        raise DataValidationError("true support index outside the statistic vector")
    rank_of = np.empty(stats.shape[0], dtype=np.int64)
    rank_of[rank_from_stats(stats)] = np.arange(1, stats.shape[0] + 1)
    true_ranks = np.sort(rank_of[indices])
    s_n = indices.shape[0]
    fn = np.arange(s_n + 1)
    sizes = np.zeros(s_n + 1, dtype=np.int64)
    sizes[:s_n] = true_ranks[s_n - 1 - fn[:s_n]]  # rank of the last kept true column
    fp = sizes - (s_n - fn)
    return FpFnCurve(fn, fp, sizes)


@dataclass(frozen=True)
class MarginalScreenResult:
    """Per-column marginal slope fits with convergence flags."""

    stats: np.ndarray  # |slope| per column, 0 where the fit failed
    converged: np.ndarray  # boolean per column
    iterations: np.ndarray = field(repr=False, default=None)

    @property
    def failures(self) -> int:
        return int(np.sum(~self.converged))


def marginal_screen_tyear(
    x: CovariateMatrix,
    s: SurvivalSample,
    t0: float,
    max_iter: int = 50,
    tol: float = 1e-8,
) -> MarginalScreenResult:
    """Fit a separate intercept-plus-slope horizon model to every column.

    Each column gets its own two-parameter logistic fit of the
    censoring-corrected survival indicator, solved by damped Newton
    iteration with step halving. Columns that fail to converge within
    max_iter iterations score 0 and are flagged. The per-column loop is the
    conventional marginal-screening cost and is deliberately not vectorized
    across columns.
    """
    if not x.standardized:
        x = standardize(x)
    model = ModelSpec("t_year", t0=t0)
    r = _tyear_pseudo_response(model, s)
    n, p = x.n, x.p
    stats = np.zeros(p)
    converged = np.zeros(p, dtype=bool)
    iters = np.zeros(p, dtype=np.int64)
    for j in range(p):
        z = x.values[:, j]
        theta = np.zeros(2)
        u = _marginal_u(theta, z, r, n)
        norm = np.max(np.abs(u))
        it = 0
        while norm >= tol and it < max_iter:
            step = _marginal_newton_step(theta, z, r, n)
            if step is None:
                break
            scale = 1.0
            for _ in range(20):
                cand = theta + scale * step
                cand_u = _marginal_u(cand, z, r, n)
                cand_norm = np.max(np.abs(cand_u))
                if cand_norm < norm:
                    break
                scale *= 0.5
            else:
                break
            theta, u, norm = cand, cand_u, cand_norm
            it += 1
        iters[j] = it
        if norm < tol:
            converged[j] = True
            stats[j] = abs(theta[1])
    return MarginalScreenResult(stats, converged, iters)


def _marginal_u(theta, z, r, n):
    pi = expit(np.clip(theta[0] + theta[1] * z, -30.0, 30.0))
    resid = r - pi
    return np.array([resid.sum(), z @ resid]) / n


def _marginal_newton_step(theta, z, r, n):
    pi = expit(np.clip(theta[0] + theta[1] * z, -30.0, 30.0))
    w = pi * (1.0 - pi)
    info = np.array([[w.sum(), w @ z], [w @ z, w @ (z * z)]]) / n
    try:
        return np.linalg.solve(info, _marginal_u(theta, z, r, n))
    except np.linalg.LinAlgError:
        return None


def write_ranking_csv(path, retained: RetainedSet):
    """Write the retained columns as index,statistic,rank rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "statistic", "rank"])
        for rank, j in enumerate(retained.retained, start=1):
            writer.writerow([int(j), repr(float(retained.stats[j])), rank])
