#!/usr/bin/env python3
"""
Metric tests: MSE, R2 and the upper-tail MSE.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the path
sys.path.insert(0, str(Path(__file__).parent))

from analysis.metrics import MetricsError, mse, r2_score, tail_mse, tail_threshold


def test_perfect_and_mean_predictions():
    actual = np.array([1.0, 2.0, 4.0, 7.0])
    assert r2_score(actual, actual) == 1.0
    assert mse(actual, actual) == 0.0
    assert r2_score(actual, np.full(4, actual.mean())) == pytest.approx(0.0)


def test_r2_can_be_negative():
    actual = np.array([0.0, 1.0, 2.0])
    assert r2_score(actual, np.array([2.0, 1.0, 0.0])) == pytest.approx(-3.0)


def test_mse_of_a_known_residual():
    assert mse([0.0, 0.0, 0.0, 0.0], [1.0, -1.0, 2.0, 0.0]) == pytest.approx(1.5)


def test_r2_undefined_cases():
    with pytest.raises(MetricsError):
        r2_score([3.0, 3.0, 3.0], [1.0, 2.0, 3.0])
    with pytest.raises(MetricsError):
        r2_score([1.0], [1.0])
    with pytest.raises(MetricsError):
        mse([1.0, 2.0], [1.0])


def test_tail_uses_the_top_decile():
    actual = np.arange(100.0)
    assert tail_threshold(actual, 90) == pytest.approx(89.1)
    pred = actual.copy()
    pred[95] += 2.0
    pred[10] += 100.0
    value, n_tail = tail_mse(actual, pred, 90)
    assert n_tail == 10
    assert value == pytest.approx(4.0 / 10)


def test_tail_needs_ten_samples():
    with pytest.raises(MetricsError):
        tail_mse(np.arange(9.0), np.arange(9.0))
    with pytest.raises(MetricsError):
        tail_threshold(np.arange(20.0), 101)


def loop_mse(actual, pred):
    total = 0.0
    for a, p in zip(actual, pred):
        total += (a - p) ** 2
    return total / len(actual)


def loop_r2(actual, pred):
    mean = sum(actual) / len(actual)
    ss_res = sum((a - p) ** 2 for a, p in zip(actual, pred))
    ss_tot = sum((a - mean) ** 2 for a in actual)
    return 1.0 - ss_res / ss_tot


def loop_tail_mse(actual, pred, percentile):
    ordered = sorted(actual)
    position = (len(ordered) - 1) * (percentile / 100.0)
    lo = int(np.floor(position))
    hi = min(lo + 1, len(ordered) - 1)
    t = position - lo
    gap = ordered[hi] - ordered[lo]
    threshold = ordered[lo] + gap * t if t < 0.5 else ordered[hi] - gap * (1.0 - t)
    picked = [(a, p) for a, p in zip(actual, pred) if a >= threshold]
    return sum((a - p) ** 2 for a, p in picked) / len(picked), len(picked)


@pytest.mark.parametrize("seed", range(200))
def test_metrics_match_plain_loops(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(10, 201))
    actual = rng.normal(rng.uniform(-2.0, 2.0), rng.uniform(0.5, 3.0), size=n)
    pred = actual + rng.normal(0.0, rng.uniform(0.05, 2.0), size=n)
    percentile = float(rng.choice([50.0, 75.0, 90.0, 95.0]))

    assert mse(actual, pred) == pytest.approx(loop_mse(actual, pred), abs=1e-12)
    assert r2_score(actual, pred) == pytest.approx(loop_r2(actual, pred), abs=1e-12)
    value, n_tail = tail_mse(actual, pred, percentile)
    expected_value, expected_n = loop_tail_mse(actual, pred, percentile)
    assert n_tail == expected_n
    assert value == pytest.approx(expected_value, abs=1e-12)


@pytest.mark.parametrize("offset", [-50.0, 0.5, 1e3])
def test_common_offset_leaves_r2_and_mse_unchanged(offset):
    rng = np.random.default_rng(4)
    actual = rng.normal(size=80)
    pred = actual + rng.normal(0.0, 0.3, size=80)
    assert r2_score(actual + offset, pred + offset) == pytest.approx(r2_score(actual, pred), abs=1e-9)
    assert mse(actual + offset, pred + offset) == pytest.approx(mse(actual, pred), abs=1e-9)


def test_worked_examples():
    assert r2_score([1.0, 2.0, 3.0], [1.0, 2.0, 4.0]) == pytest.approx(0.5)
    assert tail_threshold(np.arange(10.0), 90) == pytest.approx(8.1)


def test_zeroth_percentile_tail_is_the_whole_series():
    rng = np.random.default_rng(8)
    actual = rng.normal(size=40)
    pred = rng.normal(size=40)
    value, n_tail = tail_mse(actual, pred, 0)
    assert n_tail == 40
    assert value == pytest.approx(mse(actual, pred), abs=1e-12)
