"""Hand-checked values and oracle comparisons for the survival metrics."""

import numpy as np
import pytest

from eescreen.data import SurvivalSample, TrueModel
from eescreen.errors import DataValidationError, NoComparablePairsError
from eescreen.metrics import brier, c_statistic, ipcw_auc, mse
from oracles import km_censoring_sample, left_limit_sq_weights


def _uncensored(y):
    y = np.asarray(y, dtype=np.float64)
    return SurvivalSample(y, np.ones(y.shape[0], dtype=int))


def test_brier_perfect_predictions_score_zero():
    s = _uncensored([1, 2, 3, 4])
    pi = np.array([0.0, 0.0, 1.0, 1.0])
    assert brier(pi, s, 2.5) == 0.0


def test_brier_constant_half_uncensored_is_quarter():
    s = _uncensored([1, 2, 3, 4, 5, 6])
    assert brier(np.full(6, 0.5), s, 3.5) == pytest.approx(0.25, abs=0.0)


def test_brier_censored_hand_value():
    # Censoring survival drops to 2/3 at time 2, so units observed past the
    # horizon 2.5 are weighted 3/2 while the early failure keeps weight 1.
    s = SurvivalSample(np.array([1.0, 2.0, 3.0, 4.0]), np.array([1, 0, 1, 1]))
    pi = np.array([0.1, 0.3, 0.8, 0.9])
    expected = (0.1**2 * 1.0 + 0.2**2 * 1.5 + 0.1**2 * 1.5) / 4.0
    assert brier(pi, s, 2.5) == pytest.approx(expected, abs=1e-15)


def test_brier_validates_inputs():
    s = _uncensored([1, 2, 3])
    with pytest.raises(DataValidationError):
        brier(np.array([0.1, 1.2, 0.3]), s, 2.0)
    with pytest.raises(DataValidationError):
        brier(np.array([0.1, 0.2]), s, 2.0)
    with pytest.raises(DataValidationError):
        brier(np.array([0.1, 0.2, 0.3]), s, 0.0)


def test_auc_separating_scores_give_one():
    s = _uncensored(np.arange(1.0, 9.0))
    scores = -s.y
    assert ipcw_auc(scores, s, 4.5) == 1.0


def test_auc_constant_scores_give_exact_half():
    s = _uncensored(np.arange(1.0, 9.0))
    assert ipcw_auc(np.zeros(8), s, 4.5) == 0.5


def test_auc_tied_scores_get_half_credit():
    s = _uncensored([1.0, 2.0, 5.0])
    # Cases score [2, 1]; the lone comparator past the horizon scores 2.
    assert ipcw_auc(np.array([2.0, 1.0, 2.0]), s, 3.0) == pytest.approx(0.25)


def test_auc_censored_case_weighting():
    s = SurvivalSample(np.array([1.0, 2.0, 3.0, 4.0]), np.array([1, 0, 1, 1]))
    scores = np.array([4.0, 1.0, 2.0, 3.0])
    # Case weights are 1 and 3/2; only the first case outranks the control.
    assert ipcw_auc(scores, s, 3.5) == pytest.approx(1.0 / 2.5, abs=1e-15)


def test_auc_requires_both_groups():
    s = _uncensored([5.0, 6.0, 7.0])
    with pytest.raises(NoComparablePairsError):
        ipcw_auc(np.zeros(3), s, 2.0)
    with pytest.raises(NoComparablePairsError):
        ipcw_auc(np.zeros(3), s, 10.0)


def test_c_statistic_separating_scores_give_one():
    rng = np.random.default_rng(7)
    y = rng.exponential(size=40) + 0.1
    s = SurvivalSample(y, np.ones(40, dtype=int))
    assert c_statistic(-y, s) == 1.0


def test_c_statistic_constant_scores_give_half():
    s = _uncensored(np.arange(1.0, 11.0))
    assert c_statistic(np.zeros(10), s) == 0.5


def test_c_statistic_matches_pairwise_oracle(rng):
    from conftest import make_survival

    s = make_survival(rng, 30, censor=0.35)
    scores = rng.normal(size=30)
    tau = float(np.quantile(s.y, 0.9))
    sq_w = left_limit_sq_weights(s.y, s.delta)
    num = 0.0
    den = 0.0
    for i in range(30):
        if s.delta[i] != 1 or not s.y[i] < tau:
            continue
        for j in range(30):
            if not s.y[i] < s.y[j]:
                continue
            den += sq_w[i]
            if scores[i] > scores[j]:
                num += sq_w[i]
            elif scores[i] == scores[j]:
                num += 0.5 * sq_w[i]
    assert den > 0
    assert c_statistic(scores, s, tau=tau) == pytest.approx(num / den, abs=1e-12)


def test_c_statistic_no_usable_pairs_raises():
    s = SurvivalSample(np.array([5.0, 6.0, 7.0, 8.0]), np.array([0, 0, 0, 1]))
    # The only event is the largest time, so no pair has an earlier event.
    with pytest.raises(NoComparablePairsError):
        c_statistic(np.array([1.0, 2.0, 3.0, 4.0]), s, tau=10.0)


def test_mse_union_of_supports():
    truth = TrueModel({0: 1.0, 5: -0.8})
    assert mse({0: 1.5}, truth) == pytest.approx(0.25 + 0.64, abs=1e-15)
    assert mse({0: 1.5}, {0: 1.0, 5: -0.8}) == pytest.approx(0.89, abs=1e-15)
    assert mse({}, truth) == pytest.approx(1.0 + 0.64, abs=1e-15)
    with pytest.raises(DataValidationError):
        mse({0: 1.0}, [1.0, 0.0])


def test_censoring_curve_matches_product_limit_loop(rng):
    from conftest import make_survival
    from eescreen.kaplan_meier import RIGHT_LIMIT, km_censoring

    s = make_survival(rng, 25, ties=True, censor=0.4)
    sc = km_censoring(s)

    def product_limit(t):
        # Explicit product over distinct censoring times up to t, with events
        # at a tied time removed from the risk set before the censorings.
        surv = 1.0
        for u in np.unique(s.y[s.delta == 0]):
            if u > t:
                break
            at_risk = np.sum(s.y > u) + np.sum((s.y == u) & (s.delta == 0))
            d = np.sum((s.y == u) & (s.delta == 0))
            surv *= 1.0 - d / at_risk
        return surv

    grid = np.linspace(0.01, float(s.y.max()) + 0.5, 60)
    ours = np.asarray(sc.evaluate(grid, RIGHT_LIMIT))
    ref = np.array([product_limit(t) for t in grid])
    assert np.allclose(ours, ref, atol=1e-12)
