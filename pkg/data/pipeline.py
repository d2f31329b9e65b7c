# data/pipeline.py
"""Pre-processing: unit aggregation, forward fill, standard scaling and chronological split."""

from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from data.dataset import TARGET_COLUMN, Dataset, StandardScaler
from data.schema import (
    CELL_ID,
    ENERGY,
    SITE_ID,
    TIMESTAMP,
    UNIT_ID,
    UNIT_TYPE,
    RawRecord,
    counter_columns,
    frame_to_records,
    records_to_frame,
)
from utils.datetime_utils import BIN_FREQ
from utils.logger import get_logger

logger = get_logger(__name__)

TRAIN_FRACTION = 0.65
TEST_FRACTION = 0.30
MIN_SPLIT_ROWS = 20


class PipelineError(Exception):
    """Raised when raw data cannot be turned into a dataset."""
    pass


def attach_units(frame: pd.DataFrame, unit_map: Dict[str, str]) -> pd.DataFrame:
    """Fill unit_id from a cell -> unit map; unmapped cells are an error."""
    frame = frame.copy()
    mapped = frame[CELL_ID].astype(str).map(unit_map)
    if UNIT_ID in frame.columns:
        mapped = mapped.fillna(frame[UNIT_ID])
    missing = sorted(frame.loc[mapped.isna(), CELL_ID].astype(str).unique())
    if missing:
        raise PipelineError(f"No radio unit for cell(s): {', '.join(missing[:10])}")
    frame[UNIT_ID] = mapped.astype(str)
    return frame


def filter_unit_types(frame: pd.DataFrame, unit_types: Optional[Iterable[str]]) -> pd.DataFrame:
    """Keep rows of the given radio-unit types; no-op without a type column or filter."""
    if not unit_types or UNIT_TYPE not in frame.columns:
        return frame
    return frame[frame[UNIT_TYPE].isin(set(unit_types))].copy()


def aggregate_by_unit(records: Union[pd.DataFrame, Sequence[RawRecord]]):
    """Sum counters over the cells of each (site, unit, timestamp); energy passes through.

    Returns the same kind of container it was given.
    """
    as_records = not isinstance(records, pd.DataFrame)
    frame = records_to_frame(records) if as_records else records
    if frame.empty:
        return [] if as_records else frame.copy()
    if UNIT_ID not in frame.columns or frame[UNIT_ID].isna().any():
        raise PipelineError("records carry no cell -> unit mapping")

    keys = [SITE_ID, UNIT_ID, TIMESTAMP]
    counters = counter_columns(frame)
    grouped = frame.groupby(keys, sort=True)
    out = grouped[counters].sum(min_count=1)

    if ENERGY in frame.columns:
        distinct = grouped[ENERGY].nunique(dropna=True)
        conflicts = distinct[distinct > 1]
        if not conflicts.empty:
            site, unit, ts = conflicts.index[0]
            raise PipelineError(
                f"Conflicting energy values for site {site}, unit {unit} at {ts} "
                f"({len(conflicts)} conflicting key(s))")
        out[ENERGY] = grouped[ENERGY].first()

    out = out.reset_index()
    logger.debug(f"Aggregated {len(frame)} cell rows into {len(out)} unit rows")
    return frame_to_records(out) if as_records else out


def forward_fill(series):
    """Replace gaps with the preceding value; leading gaps take the first present value.

    Accepts a Series, DataFrame or 1-D array; an all-missing column is an error.
    """
    if isinstance(series, pd.DataFrame):
        empty = [c for c in series.columns if series[c].isna().all()]
        if empty:
            raise PipelineError(f"All values missing in column(s): {', '.join(map(str, empty))}")
        return series.ffill().bfill()
    if isinstance(series, pd.Series):
        if series.isna().all():
            raise PipelineError(f"All values missing in {series.name or 'series'}")
        return series.ffill().bfill()
    values = pd.Series(np.asarray(series, dtype=np.float64))
    return forward_fill(values).to_numpy()


def reindex_to_grid(frame: pd.DataFrame, start: Optional[pd.Timestamp] = None,
                    end: Optional[pd.Timestamp] = None, freq: str = BIN_FREQ) -> pd.DataFrame:
    """Put one unit's rows on a complete time grid; absent bins become missing values."""
    frame = frame.set_index(TIMESTAMP).sort_index()
    grid = pd.date_range(start or frame.index.min(), end or frame.index.max(), freq=freq, name=TIMESTAMP)
    return frame.reindex(grid).reset_index()


def common_interval(frames: Dict[str, pd.DataFrame]) -> Tuple[pd.Timestamp, pd.Timestamp]:
    """Latest start and earliest end over all sites."""
    if not frames:
        raise PipelineError("no sites to align")
    start = max(f[TIMESTAMP].min() for f in frames.values())
    end = min(f[TIMESTAMP].max() for f in frames.values())
    if start >= end:
        raise PipelineError(f"sites share no common time interval ({start} >= {end})")
    return start, end


def align_sites(frames: Dict[str, pd.DataFrame]) -> Dict[str, pd.DataFrame]:
    """Restrict every site to the interval common to all sites, on the full grid."""
    start, end = common_interval(frames)
    aligned = {}
    for site, frame in frames.items():
        window = frame[(frame[TIMESTAMP] >= start) & (frame[TIMESTAMP] <= end)]
        aligned[site] = reindex_to_grid(window, start, end)
    logger.info(f"Aligned {len(frames)} site(s) to common interval {start} .. {end}")
    return aligned


def chrono_split(n_rows: int, train_fraction: float = TRAIN_FRACTION,
                 test_fraction: float = TEST_FRACTION) -> Tuple[np.ndarray, np.ndarray]:
    """train = [0, floor(f_train*T)), test = [T - floor(f_test*T), T)."""
    if n_rows < MIN_SPLIT_ROWS:
        raise PipelineError(f"need at least {MIN_SPLIT_ROWS} rows to split, got {n_rows}")
    if not (0 < train_fraction < 1 and 0 < test_fraction < 1) or train_fraction + test_fraction > 1 + 1e-12:
        raise PipelineError(
            f"invalid split fractions train={train_fraction} test={test_fraction}")
    n_train = int(np.floor(train_fraction * n_rows + 1e-9))
    n_test = int(np.floor(test_fraction * n_rows + 1e-9))
    return np.arange(0, n_train), np.arange(n_rows - n_test, n_rows)


def fit_scale(values: np.ndarray, columns: List[str]) -> StandardScaler:
    """Per-column mean and population std of the train rows.

    A constant column gets std 1 (it maps to 0) and a warning.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] == 0:
        raise PipelineError("cannot fit a scaler on an empty train portion")
    mean = values.mean(axis=0)
    std = values.std(axis=0, ddof=0)
    constant = std == 0
    if constant.any():
        names = [columns[k] for k in np.flatnonzero(constant)]
        logger.warning(f"Constant column(s) in train portion, std set to 1: {', '.join(names)}")
        std = np.where(constant, 1.0, std)
    return StandardScaler(list(columns), mean, std)


def apply_scale(values: np.ndarray, scaler: StandardScaler) -> np.ndarray:
    return scaler.transform(values)


def build_dataset(frame: pd.DataFrame, feature_columns: Optional[List[str]] = None,
                  target_column: str = ENERGY, train_fraction: float = TRAIN_FRACTION,
                  test_fraction: float = TEST_FRACTION, **meta) -> Dataset:
    """Single-series frame -> forward-filled, chronologically split, train-scaled Dataset."""
    frame = frame.sort_values(TIMESTAMP).reset_index(drop=True)
    feature_columns = feature_columns or counter_columns(frame)
    missing = [c for c in feature_columns + [target_column] if c not in frame.columns]
    if missing:
        raise PipelineError(f"missing column(s): {', '.join(missing)}")
    if frame[TIMESTAMP].duplicated().any():
        raise PipelineError("duplicate timestamps; aggregate to one series first")

    columns = feature_columns + [target_column]
    raw = forward_fill(frame[columns].astype(np.float64)).to_numpy()
    train_idx, test_idx = chrono_split(len(frame), train_fraction, test_fraction)

    scaler = fit_scale(raw[train_idx], feature_columns + [TARGET_COLUMN])
    scaled = apply_scale(raw, scaler)
    dataset = Dataset(
        features=scaled[:, :-1],
        target=scaled[:, -1],
        timestamps=frame[TIMESTAMP].to_numpy(dtype="datetime64[ns]"),
        feature_names=list(feature_columns),
        train_idx=train_idx,
        test_idx=test_idx,
        scaler=scaler,
        meta={"train_fraction": train_fraction, "test_fraction": test_fraction, **meta},
    )
    dataset.validate()
    return dataset


def unit_series(frame: pd.DataFrame, site_id: str, unit_id: Optional[str] = None) -> pd.DataFrame:
    """Rows of one site (and unit; default the first unit) from an aggregated frame."""
    rows = frame[frame[SITE_ID] == site_id]
    if rows.empty:
        raise PipelineError(f"unknown site {site_id!r}")
    unit_id = unit_id or sorted(rows[UNIT_ID].astype(str).unique())[0]
    rows = rows[rows[UNIT_ID].astype(str) == str(unit_id)]
    if rows.empty:
        raise PipelineError(f"site {site_id!r} has no unit {unit_id!r}")
    return rows.drop(columns=[SITE_ID, UNIT_ID]).reset_index(drop=True)
