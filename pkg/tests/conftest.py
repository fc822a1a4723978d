"""Shared fixture builders for the test suite."""

import numpy as np
import pytest

from eescreen.data import CovariateMatrix, SurvivalSample, standardize


def make_standardized(rng, n, p):
    raw = CovariateMatrix.from_raw(rng.normal(size=(n, p)))
    return standardize(raw)


def make_survival(rng, n, ties=False, censor=0.4):
    """Random survival sample with at least one event; optional tied times."""
    if ties:
        y = rng.integers(1, 9, size=n) / 2.0
    else:
        y = rng.exponential(scale=2.0, size=n) + 0.05
    delta = (rng.random(n) >= censor).astype(np.int64)
    if not delta.any():
        delta[int(rng.integers(0, n))] = 1
    return SurvivalSample(y, delta)


@pytest.fixture
def rng():
    return np.random.default_rng(20260825)
