# utils/containers.py
"""Deterministic on-disk container of named numpy arrays plus JSON metadata.

Layout: a zip archive holding one `<name>.npy` member per array and a
`meta.json` member. Members are written in sorted order with a fixed
timestamp, so identical content always produces identical bytes.
"""

import io
import json
import zipfile
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np

from utils.converters import convert_numpy
from utils.logger import get_logger

logger = get_logger(__name__)

META_MEMBER = "meta.json"
_FIXED_DATE = (1980, 1, 1, 0, 0, 0)


class ContainerError(Exception):
    """Raised for unreadable or malformed containers."""
    pass


def _member(name: str) -> zipfile.ZipInfo:
    info = zipfile.ZipInfo(name, date_time=_FIXED_DATE)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    return info


def write_container(path: Union[str, Path], arrays: Dict[str, np.ndarray],
                    meta: Dict[str, Any]) -> Path:
    """Write arrays and metadata to `path`, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    for name in arrays:
        if "/" in name:
            raise ContainerError(f"Invalid array name: {name!r}")

    with zipfile.ZipFile(path, "w") as archive:
        for name in sorted(arrays):
            buffer = io.BytesIO()
            array = np.asarray(arrays[name])
            if array.dtype == object:
                raise ContainerError(f"Array {name!r} has object dtype; store it in metadata instead")
            np.lib.format.write_array(buffer, array, allow_pickle=False)
            archive.writestr(_member(f"{name}.npy"), buffer.getvalue())

        meta_text = json.dumps(convert_numpy(meta), sort_keys=True, indent=2)
        archive.writestr(_member(META_MEMBER), meta_text.encode("utf-8"))

    logger.debug(f"Wrote container {path} with {len(arrays)} array(s)")
    return path


def read_container(path: Union[str, Path]) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """Read a container written by write_container."""
    path = Path(path)
    if not path.exists():
        raise ContainerError(f"Container not found: {path}")

    arrays: Dict[str, np.ndarray] = {}
    try:
        with zipfile.ZipFile(path, "r") as archive:
            names = archive.namelist()
            if META_MEMBER not in names:
                raise ContainerError(f"{path} has no {META_MEMBER} member")
            meta = json.loads(archive.read(META_MEMBER).decode("utf-8"))
            for member in names:
                if not member.endswith(".npy"):
                    continue
                with archive.open(member) as handle:
                    buffer = io.BytesIO(handle.read())
                arrays[member[:-4]] = np.lib.format.read_array(buffer, allow_pickle=False)
    except (zipfile.BadZipFile, json.JSONDecodeError, ValueError) as e:
        raise ContainerError(f"Failed to read container {path}: {e}")

    return arrays, meta
