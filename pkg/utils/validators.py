# utils/validators.py
"""Data validation utilities for arrays and grid timestamps."""

from typing import Any, Iterable, Optional, Sequence

import numpy as np
import pandas as pd


class ValidationError(Exception):
    """Custom exception for validation errors."""
    pass


class Validator:
    """Grid and timestamp checks."""

    @staticmethod
    def is_on_grid(timestamps: Iterable[Any], freq: str = "15min") -> bool:
        """True when every timestamp sits exactly on the given grid."""
        index = pd.DatetimeIndex(pd.to_datetime(list(timestamps)))
        if len(index) == 0:
            return True
        return bool((index == index.floor(freq)).all())


class ArrayValidator:
    """Validators raising ValidationError with a descriptive message."""

    @staticmethod
    def require_finite(values: Any, name: str) -> np.ndarray:
        """Return values as float64, raising if any element is NaN or infinite."""
        array = np.asarray(values, dtype=np.float64)
        if not np.all(np.isfinite(array)):
            bad = int(np.size(array) - np.count_nonzero(np.isfinite(array)))
            raise ValidationError(f"{name} contains {bad} non-finite value(s)")
        return array

    @staticmethod
    def require_shape(values: np.ndarray, shape: Sequence[Optional[int]], name: str) -> np.ndarray:
        """Check ndim and every non-None dimension."""
        if values.ndim != len(shape) or any(
            expected is not None and actual != expected
            for actual, expected in zip(values.shape, shape)
        ):
            raise ValidationError(f"{name} has shape {values.shape}, expected {tuple(shape)}")
        return values

