"""Product-limit estimation of the censoring survival curve.

Every inverse-probability-of-censoring weight in the library flows through
here. The estimator treats censorings as the events of interest; at a tied
time the true event is removed from the risk set before the censoring is
counted (events precede censorings). Weights used as denominators are clamped
below at ``DENOMINATOR_FLOOR`` and the clamp is counted, never turned into Inf.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import SurvivalSample
from .errors import DataValidationError

#: Smallest value a survival probability may take when used as a denominator.
DENOMINATOR_FLOOR = 1e-10

RIGHT_LIMIT = "right_limit"
LEFT_LIMIT = "left_limit"


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant function on [0, inf).

    ``values[k]`` holds the function value on ``[knots[k], knots[k+1])``;
    before the first knot the value is ``value_at_zero``.
    """

    knots: np.ndarray
    values: np.ndarray
    value_at_zero: float = 1.0

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        if knots.shape != values.shape or knots.ndim != 1:
            raise DataValidationError("knots and values must be 1-d arrays of equal length")
        if knots.size and np.any(np.diff(knots) <= 0):
            raise DataValidationError("knots must be strictly increasing")
        if np.any(values < 0) or np.any(values > 1):
            raise DataValidationError("values must lie in [0, 1]")
        if knots.size:
            full = np.concatenate(([self.value_at_zero], values))
            if np.any(np.diff(full) > 0):
                raise DataValidationError("survival values must be nonincreasing")

    def evaluate(self, t, side: str = RIGHT_LIMIT):
        """Value at ``t`` (right limit) or just before ``t`` (left limit)."""
        t = np.asarray(t, dtype=np.float64)
        if side == RIGHT_LIMIT:
            idx = np.searchsorted(self.knots, t, side="right")
        elif side == LEFT_LIMIT:
            idx = np.searchsorted(self.knots, t, side="left")
        else:
            raise ValueError(f"side must be {RIGHT_LIMIT!r} or {LEFT_LIMIT!r}")
        padded = np.concatenate(([self.value_at_zero], self.values))
        out = padded[idx]
        return float(out) if out.ndim == 0 else out

    def __call__(self, t):
        return self.evaluate(t, RIGHT_LIMIT)


def eval_step(f: StepFunction, t, side: str = RIGHT_LIMIT):
    """Functional form of :meth:`StepFunction.evaluate`."""
    return f.evaluate(t, side)


def km_censoring(s: SurvivalSample) -> StepFunction:
    """Kaplan-Meier estimate of the censoring survival function S_C.

    Censorings play the role of events: at each time with d censorings and r
    units still at risk (events at that same time already removed), the curve
    is multiplied by (1 - d/r). With no censorings the constant function 1 is
    returned.
    """
    y = s.y
    delta = s.delta
    order = np.argsort(y, kind="stable")
    ys = y[order]
    ds = delta[order]

    uniq, starts = np.unique(ys, return_index=True)
    n = y.shape[0]
    knots, values = [], []
    surv = 1.0
    for k, t in enumerate(uniq):
        lo = starts[k]
        hi = starts[k + 1] if k + 1 < uniq.size else n
        d_event = int(np.sum(ds[lo:hi] == 1))
        d_cens = (hi - lo) - d_event
        if d_cens == 0:
            continue
        at_risk = (n - lo) - d_event  # events at t leave the risk set first
        surv *= 1.0 - d_cens / at_risk
        knots.append(float(t))
        values.append(surv)
    return StepFunction(np.array(knots), np.array(values))


@dataclass
class ClampCounter:
    """Counts how often a denominator had to be floored."""

    count: int = 0
    floor: float = field(default=DENOMINATOR_FLOOR)

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        low = values < self.floor
        self.count += int(np.count_nonzero(low))
        if np.any(low):
            return np.where(low, self.floor, values)
        return values


def censoring_weights(
    sc: StepFunction,
    times: np.ndarray,
    side: str = LEFT_LIMIT,
    power: int = 1,
    counter: ClampCounter | None = None,
) -> np.ndarray:
    """IPCW weights 1 / S_C(t)^power with the floor guard applied.

    ``side`` selects S_C(t) (right limit) or S_C(t-) (left limit); the left
    limit is the library default wherever the weight sits inside a sum over
    events, keeping the weight of an event at the largest observed time
    finite.
    """
    counter = counter if counter is not None else ClampCounter()
    denom = counter.apply(np.asarray(sc.evaluate(times, side))) ** power
    return 1.0 / denom
