# data/ingest.py
"""Read raw per-site counter CSVs and the cell -> unit map."""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Optional, Union

import pandas as pd

from data.pipeline import PipelineError, attach_units
from data.schema import CELL_ID, ENERGY, REQUIRED_COLUMNS, SITE_ID, TIMESTAMP, UNIT_ID
from utils.datetime_utils import BIN_FREQ
from utils.logger import get_logger
from utils.validators import Validator

logger = get_logger(__name__)

UNIT_MAP_FILE = "unit_map.csv"


def read_site_csv(path: Union[str, Path]) -> pd.DataFrame:
    """Parse one site file, checking required columns and the 15-minute grid."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={SITE_ID: str, CELL_ID: str, UNIT_ID: str})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise PipelineError(f"Failed to read {path}: {e}")

    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise PipelineError(f"{path.name}: missing column(s) {', '.join(missing)}")

    try:
        frame[TIMESTAMP] = pd.to_datetime(frame[TIMESTAMP], utc=True).dt.tz_localize(None)
    except (ValueError, TypeError) as e:
        raise PipelineError(f"{path.name}: unparseable timestamp: {e}")
    if not Validator.is_on_grid(frame[TIMESTAMP], BIN_FREQ):
        raise PipelineError(f"{path.name}: timestamps not aligned to the {BIN_FREQ} grid")
    if ENERGY in frame.columns:
        frame[ENERGY] = pd.to_numeric(frame[ENERGY], errors="coerce")
    return frame


def read_unit_map(path: Union[str, Path]) -> Dict[str, str]:
    """cell_id -> unit_id; a cell listed twice with different units is an error."""
    try:
        frame = pd.read_csv(path, dtype=str)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise PipelineError(f"Failed to read unit map {path}: {e}")
    if not {CELL_ID, UNIT_ID} <= set(frame.columns):
        raise PipelineError(f"unit map {path} needs columns {CELL_ID}, {UNIT_ID}")
    frame = frame.drop_duplicates()
    duplicated = frame[frame[CELL_ID].duplicated()][CELL_ID].tolist()
    if duplicated:
        raise PipelineError(f"cell(s) mapped to several units: {', '.join(duplicated[:10])}")
    return dict(zip(frame[CELL_ID], frame[UNIT_ID]))


def load_site_directory(directory: Union[str, Path],
                        max_workers: Optional[int] = None) -> Dict[str, pd.DataFrame]:
    """Read every site CSV in a directory in parallel, keyed by site_id.

    The unit map file, when present, fills `unit_id`.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise PipelineError(f"not a directory: {directory}")
    paths = sorted(p for p in directory.glob("*.csv") if p.name != UNIT_MAP_FILE)
    if not paths:
        raise PipelineError(f"no site CSV files in {directory}")

    unit_map = read_unit_map(directory / UNIT_MAP_FILE) if (directory / UNIT_MAP_FILE).exists() else None

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        frames = list(pool.map(read_site_csv, paths))

    sites: Dict[str, pd.DataFrame] = {}
    for frame in frames:
        if unit_map is not None:
            frame = attach_units(frame, unit_map)
        for site_id, rows in frame.groupby(SITE_ID, sort=True):
            if site_id in sites:
                sites[site_id] = pd.concat([sites[site_id], rows], ignore_index=True)
            else:
                sites[site_id] = rows.reset_index(drop=True)

    logger.info(f"Loaded {len(paths)} file(s) covering {len(sites)} site(s) from {directory}")
    return sites
