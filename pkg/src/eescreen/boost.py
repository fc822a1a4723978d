"""Stagewise coordinate boosting on estimating equations.

The booster starts from the zero coefficient vector and, at each step,
nudges the single coordinate whose estimating-equation component is largest
in magnitude by a fixed increment epsilon in the direction that component
indicates. The step index plays the role of the regularization parameter:
early stopping gives sparse fits, and the order in which coordinates first
become active gives an iterated screening ranking. A generalized
cross-validation rule picks the stopping step.

Coefficients along the path are exact integer multiples of epsilon; the
path stores signed unit steps and materializes coefficients from net step
counts, so replaying a path is reproducible to the byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .data import CovariateMatrix, SurvivalSample, standardize
from .equations import (
    ETA_CAP,
    ModelSpec,
    evaluate_full,
    gehan_loss,
    linear_predictor,
    _as_response,
    _as_survival,
)
from .errors import DataValidationError, EmptyGridError
from .metrics import brier

#: Largest permitted step size; beyond this the stagewise path is too coarse.
MAX_EPSILON = 0.1

DEFAULT_EPSILON = 0.01
DEFAULT_T_MAX = 1000

STOP_T_MAX = "t_max"
STOP_STAGNATION = "stagnation"

GCV_CRITERIA = ("rss_gcv", "brier_gcv", "gehan_gcv")


@dataclass(frozen=True)
class CoefficientPath:
    """Full record of a boosting run: one signed coordinate step per entry."""

    model: ModelSpec
    epsilon: float
    p: int
    steps: np.ndarray  # coordinate index per step, in order
    signs: np.ndarray  # +1 or -1 per step
    stop_reason: str

    def __post_init__(self):
        object.__setattr__(self, "steps", np.asarray(self.steps, dtype=np.int64))
        object.__setattr__(self, "signs", np.asarray(self.signs, dtype=np.int64))
        if self.steps.shape != self.signs.shape or self.steps.ndim != 1:
            raise DataValidationError("steps and signs must be matching 1-d arrays")

    @property
    def t_final(self) -> int:
        return self.steps.shape[0]

    def _counts_through(self, t: int) -> dict:
        if not 0 <= t <= self.t_final:
            raise DataValidationError(f"step index must lie in [0, {self.t_final}]")
        counts: dict[int, int] = {}
        for j, sign in zip(self.steps[:t], self.signs[:t]):
            j = int(j)
            c = counts.get(j, 0) + int(sign)
            if c == 0:
                del counts[j]
            else:
                counts[j] = c
        return counts

    def coefficients_at(self, t: int) -> dict:
        """Coefficient dict after t steps; every value is a multiple of epsilon."""
        return {j: c * self.epsilon for j, c in sorted(self._counts_through(t).items())}

    def support_at(self, t: int) -> list:
        return sorted(self._counts_through(t))

    @property
    def final_coefficients(self) -> dict:
        return self.coefficients_at(self.t_final)

    def change_points(self) -> np.ndarray:
        """Steps at which the active set gains or loses a coordinate."""
        points = []
        counts: dict[int, int] = {}
        for t, (j, sign) in enumerate(zip(self.steps, self.signs), start=1):
            j = int(j)
            before = counts.get(j, 0)
            after = before + int(sign)
            if after == 0:
                del counts[j]
            else:
                counts[j] = after
            if before == 0 or after == 0:
                points.append(t)
        return np.asarray(points, dtype=np.int64)


def eeboost(
    model: ModelSpec,
    x: CovariateMatrix,
    outcome,
    epsilon: float = DEFAULT_EPSILON,
    t_max: int = DEFAULT_T_MAX,
) -> CoefficientPath:
    """Run the stagewise booster and return the whole path.

    Each step evaluates the full estimating equation at the current
    coefficients, picks the coordinate with the largest magnitude (ties go
    to the lower index), and moves it by epsilon toward the sign of its
    component. Stops after t_max steps, or earlier if the equation vanishes
    identically.
    """
    if not 0.0 < epsilon <= MAX_EPSILON:
        raise DataValidationError(f"epsilon must lie in (0, {MAX_EPSILON}], got {epsilon}")
    if t_max < 1:
        raise DataValidationError("t_max must be at least 1")
    if not x.standardized:
        x = standardize(x)
    counts: dict[int, int] = {}
    steps, signs = [], []
    stop = STOP_T_MAX
    for _ in range(t_max):
        beta = {j: c * epsilon for j, c in counts.items()}
        u = evaluate_full(model, x, outcome, beta)
        j = int(np.argmax(np.abs(u)))
        if u[j] == 0.0:
            stop = STOP_STAGNATION
            break
        sign = 1 if u[j] > 0 else -1
        counts[j] = counts.get(j, 0) + sign
        if counts[j] == 0:
            del counts[j]
        steps.append(j)
        signs.append(sign)
    return CoefficientPath(model, epsilon, x.p, np.array(steps), np.array(signs), stop)


@dataclass(frozen=True)
class SelectionSequence:
    """Iterated screening ranking distilled from a boosting path."""

    path: CoefficientPath
    entered: np.ndarray  # coordinates in first-entry order
    left: np.ndarray  # coordinates that were later stepped back to zero
    change_points: np.ndarray = field(repr=False, default=None)

    @property
    def p(self) -> int:
        return self.path.p

    def entry_ranks(self) -> np.ndarray:
        """1-based first-entry rank per coordinate; never-entered get p + 1."""
        ranks = np.full(self.p, self.p + 1, dtype=np.int64)
        ranks[self.entered] = np.arange(1, self.entered.shape[0] + 1)
        return ranks

    def minimum_model_size(self, truth) -> int:
        """Entry rank of the slowest true coordinate; p if any never enters."""
        indices = np.asarray(sorted(getattr(truth, "indices", truth)), dtype=np.int64)
        ranks = self.entry_ranks()[indices]
        worst = int(ranks.max())
        return self.p if worst > self.p else worst

    def fp_fn_curve(self, truth):
        """False positives against tolerated false negatives, by entry order.

        Allowing f misses, the model must extend to the entry of the
        (s_n - f)-th true coordinate; levels that the path never reaches
        are charged the worst case, a model of size p.
        """
        from .screening import FpFnCurve

        indices = np.asarray(sorted(getattr(truth, "indices", truth)), dtype=np.int64)
        true_ranks = np.sort(self.entry_ranks()[indices])
        s_n = indices.shape[0]
        fn = np.arange(s_n + 1)
        sizes = np.zeros(s_n + 1, dtype=np.int64)
        needed = true_ranks[s_n - 1 - fn[:s_n]]
        sizes[:s_n] = np.where(needed > self.p, self.p, needed)
        fp = sizes - (s_n - fn)
        return FpFnCurve(fn, fp, sizes)


def ieescreen(
    model: ModelSpec,
    x: CovariateMatrix,
    outcome,
    epsilon: float = DEFAULT_EPSILON,
    t_max: int = DEFAULT_T_MAX,
) -> SelectionSequence:
    """Rank coordinates by the order the booster first activates them."""
    path = eeboost(model, x, outcome, epsilon=epsilon, t_max=t_max)
    entered, left = [], []
    seen = set()
    counts: dict[int, int] = {}
    for j, sign in zip(path.steps, path.signs):
        j = int(j)
        before = counts.get(j, 0)
        after = before + int(sign)
        if after == 0:
            del counts[j]
            left.append(j)
        else:
            counts[j] = after
        if before == 0 and j not in seen:
            seen.add(j)
            entered.append(j)
    return SelectionSequence(
        path,
        np.asarray(entered, dtype=np.int64),
        np.asarray(left, dtype=np.int64),
        path.change_points(),
    )


@dataclass(frozen=True)
class TunedCoefficients:
    """GCV-selected stopping step and the coefficients there."""

    t: int
    coefficients: dict
    criterion: str
    grid: np.ndarray
    values: np.ndarray
    degrees: np.ndarray


def _criterion_value(criterion, model, x, outcome, beta):
    if criterion == "rss_gcv":
        y = _as_response(outcome)
        resid = y - linear_predictor(x, beta)
        return float(resid @ resid) / x.n
    if criterion == "brier_gcv":
        if model.t0 is None:
            raise DataValidationError("brier_gcv needs a model with a horizon t0")
        s = _as_survival(outcome)
        eta = np.clip(linear_predictor(x, beta), -ETA_CAP, ETA_CAP)
        return brier(expit(eta), s, model.t0, model.censoring_weight_side)
    s = _as_survival(outcome)
    return gehan_loss(x, s, beta)


def gcv_tune(
    model: ModelSpec,
    x: CovariateMatrix,
    outcome,
    path: CoefficientPath,
    criterion: str,
) -> TunedCoefficients:
    """Pick the stopping step minimizing criterion / (1 - df/n)^2.

    The candidate grid is every step where the active set changes size,
    plus the final step of the path. df is the active-set size; candidates
    with df >= n are discarded, and ties break toward the earlier step.
    """
    if criterion not in GCV_CRITERIA:
        raise DataValidationError(f"criterion must be one of {GCV_CRITERIA}")
    if not x.standardized:
        x = standardize(x)
    grid = np.unique(np.concatenate((path.change_points(), [path.t_final])))
    grid = grid[grid >= 1]
    kept_t, kept_val, kept_df = [], [], []
    for t in grid:
        beta = path.coefficients_at(int(t))
        df = len(beta)
        if df >= x.n:
            continue
        value = _criterion_value(criterion, model, x, outcome, beta)
        kept_t.append(int(t))
        kept_val.append(value / (1.0 - df / x.n) ** 2)
        kept_df.append(df)
    if not kept_t:
        raise EmptyGridError("no candidate stopping step with df below n")
    values = np.asarray(kept_val)
    best = int(np.argmin(values))
    t_star = kept_t[best]
    return TunedCoefficients(
        t_star,
        path.coefficients_at(t_star),
        criterion,
        np.asarray(kept_t, dtype=np.int64),
        values,
        np.asarray(kept_df, dtype=np.int64),
    )
