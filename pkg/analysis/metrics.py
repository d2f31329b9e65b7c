# analysis/metrics.py
"""Regression accuracy metrics in the standardized target space."""

from typing import Tuple

import numpy as np

from utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_TAIL_PERCENTILE = 90.0
MIN_TAIL_SAMPLES = 10


class MetricsError(ValueError):
    """Metric undefined for the given inputs."""
    pass


def _pair(actual, pred, minimum: int) -> Tuple[np.ndarray, np.ndarray]:
    actual = np.asarray(actual, dtype=np.float64).ravel()
    pred = np.asarray(pred, dtype=np.float64).ravel()
    if actual.shape != pred.shape:
        raise MetricsError(f"length mismatch: actual {actual.size} vs pred {pred.size}")
    if actual.size < minimum:
        raise MetricsError(f"need at least {minimum} sample(s), got {actual.size}")
    return actual, pred


def mse(actual, pred) -> float:
    actual, pred = _pair(actual, pred, 1)
    residual = actual - pred
    return float(np.mean(residual * residual))


def r2_score(actual, pred) -> float:
    """1 - SS_res / SS_tot; a constant actual series is an error, not 0."""
    actual, pred = _pair(actual, pred, 2)
    centered = actual - actual.mean()
    ss_tot = float(np.sum(centered * centered))
    if ss_tot == 0.0:
        raise MetricsError("r2_score undefined for a constant actual series")
    residual = actual - pred
    return 1.0 - float(np.sum(residual * residual)) / ss_tot


def tail_threshold(actual, percentile: float = DEFAULT_TAIL_PERCENTILE) -> float:
    """Linear-interpolation quantile of the actual values."""
    if not 0.0 <= percentile <= 100.0:
        raise MetricsError(f"percentile must be in [0, 100], got {percentile}")
    return float(np.percentile(np.asarray(actual, dtype=np.float64), percentile, method="linear"))


def tail_mse(actual, pred, percentile: float = DEFAULT_TAIL_PERCENTILE) -> Tuple[float, int]:
    """MSE over samples whose actual value is at or above the percentile threshold."""
    actual, pred = _pair(actual, pred, MIN_TAIL_SAMPLES)
    threshold = tail_threshold(actual, percentile)
    mask = actual >= threshold
    n_tail = int(mask.sum())
    if n_tail == 0:
        raise MetricsError(f"empty tail above threshold {threshold}")
    residual = actual[mask] - pred[mask]
    return float(np.mean(residual * residual)), n_tail
