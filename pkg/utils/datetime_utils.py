# utils/datetime_utils.py
"""Time helpers: UTC clock and the 15-minute counter grid."""

from datetime import datetime, timezone

import numpy as np
import pandas as pd

# One counter bin; one bin is one unit of model time.
BIN_FREQ = "15min"


def utc_now() -> datetime:
    """Get current UTC time as timezone-aware datetime.

    Returns:
        datetime: Current UTC time with timezone info
    """
    return datetime.now(timezone.utc)


def bin_range(start: str, periods: int, freq: str = BIN_FREQ) -> np.ndarray:
    """Return `periods` UTC-naive datetime64 bins starting at `start`."""
    return pd.date_range(start=start, periods=periods, freq=freq).values

