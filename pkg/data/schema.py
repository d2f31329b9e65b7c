# data/schema.py
"""Raw counter CSV schema.

One row per (timestamp, site, cell). `timestamp` is ISO-8601 on the
15-minute grid; `energy` is joules per bin measured per radio unit and may
be empty. Any further numeric column is treated as an extra counter.
Cell-to-unit map CSV: `cell_id, unit_id`.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import pandas as pd

TIMESTAMP = "timestamp"
SITE_ID = "site_id"
CELL_ID = "cell_id"
UNIT_ID = "unit_id"
ENERGY = "energy"
UNIT_TYPE = "unit_type"

COUNTER_COLUMNS = (
    "prb_util_dl",
    "prb_util_ul",
    "data_volume_dl",
    "data_volume_ul",
    "connected_users",
    "active_sessions",
    "throughput_dl",
    "throughput_ul",
    "signaling_overhead",
)

KEY_COLUMNS = (TIMESTAMP, SITE_ID, CELL_ID, UNIT_ID)
REQUIRED_COLUMNS = (TIMESTAMP, SITE_ID, CELL_ID)
NON_COUNTER_COLUMNS = frozenset(KEY_COLUMNS + (ENERGY, UNIT_TYPE))


@dataclass
class RawRecord:
    """One counter sample of a cell (or, after aggregation, of a radio unit)."""

    timestamp: pd.Timestamp
    site_id: str
    unit_id: str
    counters: Dict[str, float] = field(default_factory=dict)
    energy: Optional[float] = None
    cell_id: Optional[str] = None


def counter_columns(frame: pd.DataFrame) -> List[str]:
    """Known counters first, in schema order, then any other numeric column."""
    known = [c for c in COUNTER_COLUMNS if c in frame.columns]
    extra = [
        c for c in frame.columns
        if c not in NON_COUNTER_COLUMNS and c not in known and pd.api.types.is_numeric_dtype(frame[c])
    ]
    return known + sorted(extra)


def records_to_frame(records: Sequence[RawRecord]) -> pd.DataFrame:
    rows = []
    for r in records:
        row = {TIMESTAMP: pd.Timestamp(r.timestamp), SITE_ID: r.site_id, UNIT_ID: r.unit_id,
               CELL_ID: r.cell_id, ENERGY: r.energy}
        row.update(r.counters)
        rows.append(row)
    frame = pd.DataFrame(rows)
    if ENERGY in frame.columns:
        frame[ENERGY] = pd.to_numeric(frame[ENERGY], errors="coerce")
    return frame


def frame_to_records(frame: pd.DataFrame) -> List[RawRecord]:
    counters = counter_columns(frame)
    records = []
    for row in frame.to_dict("records"):
        energy = row.get(ENERGY)
        records.append(RawRecord(
            timestamp=pd.Timestamp(row[TIMESTAMP]),
            site_id=row[SITE_ID],
            unit_id=row[UNIT_ID],
            counters={c: float(row[c]) for c in counters},
            energy=None if energy is None or pd.isna(energy) else float(energy),
            cell_id=row.get(CELL_ID),
        ))
    return records
