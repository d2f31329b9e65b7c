# utils/converters.py
"""Utility functions for data type conversion."""

import json
import math
from pathlib import Path
from typing import Any

import numpy as np


def convert_numpy(obj: Any) -> Any:
    """
    Recursively convert numpy scalars and arrays to plain Python for JSON serialization.

    Args:
        obj: Object that may contain numpy values

    Returns:
        Object with numpy values converted to int/float/list; non-finite floats become None
    """
    if isinstance(obj, dict):
        return {str(k): convert_numpy(v) for k, v in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [convert_numpy(v) for v in obj]
    elif isinstance(obj, np.ndarray):
        return [convert_numpy(v) for v in obj.tolist()]
    elif isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    elif isinstance(obj, np.bool_):
        return bool(obj)
    elif isinstance(obj, Path):
        return str(obj)
    else:
        return obj


def safe_json_dumps(obj: Any, **kwargs) -> str:
    """
    Serialize object to JSON with sorted keys, converting numpy values first.

    Args:
        obj: Object to serialize
        **kwargs: Additional arguments for json.dumps

    Returns:
        JSON string
    """
    kwargs.setdefault("sort_keys", True)
    kwargs.setdefault("indent", 2)
    return json.dumps(convert_numpy(obj), **kwargs)

