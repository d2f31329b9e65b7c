# analysis/compute_cost.py
"""Training cost accounting: parameters, FLOPs and wall time, plus external meter readings.

Energy is not modelled. flops_total counts one forward pass per training
step and weights backward as twice the forward cost:

    flops_total = 3 * flops_per_step * train_steps * epochs
"""

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from data.dataset import Dataset
from models.base import SequenceModel
from models.wiring import Wiring, flops_per_step, lstm_param_count, param_count
from training.trainer import TrainConfig
from utils.logger import get_logger

logger = get_logger(__name__)

FORWARD_BACKWARD_FACTOR = 3
METER_COLUMNS = ("run_id", "joules")


class EnergyImportError(Exception):
    """Malformed energy meter CSV."""
    pass


@dataclass
class CostLedger:
    run_id: str
    model_kind: str
    params: int
    flops_per_step: int
    train_steps: int
    epochs: int
    flops_total: int
    wall_seconds: float = 0.0
    external_energy_joules: Optional[float] = None

    @property
    def flops_forward(self) -> int:
        return self.flops_total // FORWARD_BACKWARD_FACTOR

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _architecture_cost(cfg: TrainConfig, model: Union[SequenceModel, Wiring, Tuple[int, int]]):
    if isinstance(model, SequenceModel):
        return model.param_count(), model.flops_per_step()
    if isinstance(model, Wiring):
        return param_count(model), flops_per_step(model, cfg.ode_unfolds)
    input_dim, hidden = model
    return lstm_param_count(input_dim, hidden), flops_per_step((input_dim, hidden))


def ledger_for(cfg: TrainConfig, model: Union[SequenceModel, Wiring, Tuple[int, int]],
               dataset: Union[Dataset, int], wall_seconds: float = 0.0,
               run_id: Optional[str] = None) -> CostLedger:
    """Deterministic cost of training `model` under `cfg` on the train rows of `dataset`."""
    params, per_step = _architecture_cost(cfg, model)
    steps = dataset if isinstance(dataset, int) else int(dataset.train_idx.size)
    return CostLedger(
        run_id=run_id or cfg.config_hash(),
        model_kind=cfg.model_kind,
        params=int(params),
        flops_per_step=int(per_step),
        train_steps=steps,
        epochs=cfg.epochs,
        flops_total=FORWARD_BACKWARD_FACTOR * int(per_step) * steps * cfg.epochs,
        wall_seconds=float(wall_seconds),
    )


def import_energy(meter_csv: Union[str, Path],
                  ledgers: Optional[Dict[str, CostLedger]] = None) -> Dict[str, float]:
    """Read `run_id, joules` rows; duplicate run ids are summed with a warning.

    Readings are attached to the matching ledgers; unmatched ledgers are left untouched.
    """
    try:
        frame = pd.read_csv(meter_csv, dtype={"run_id": str})
    except pd.errors.EmptyDataError:
        return {}
    except (OSError, pd.errors.ParserError) as e:
        raise EnergyImportError(f"Failed to read meter CSV {meter_csv}: {e}")

    missing = [c for c in METER_COLUMNS if c not in frame.columns]
    if missing:
        raise EnergyImportError(f"Meter CSV {meter_csv} lacks column(s): {', '.join(missing)}")
    if frame.empty:
        return {}

    joules = pd.to_numeric(frame["joules"], errors="coerce")
    bad = frame.loc[joules.isna() | ~np.isfinite(joules.fillna(0.0)), "run_id"].tolist()
    if bad or frame["run_id"].isna().any():
        raise EnergyImportError(f"Meter CSV {meter_csv} has invalid rows (run ids: {bad[:5]})")
    frame = frame.assign(joules=joules)

    duplicated = sorted(frame.loc[frame["run_id"].duplicated(), "run_id"].unique())
    if duplicated:
        logger.warning(f"Summing duplicate meter rows for run id(s): {', '.join(duplicated)}")
    readings = {str(k): float(v) for k, v in frame.groupby("run_id", sort=True)["joules"].sum().items()}

    if ledgers:
        matched = 0
        for run_id, value in readings.items():
            if run_id in ledgers:
                ledgers[run_id].external_energy_joules = value
                matched += 1
        logger.info(f"Attached {matched} of {len(readings)} meter reading(s)")
    return readings
