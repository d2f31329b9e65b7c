# analysis/report.py
"""Per-run evaluation reports and their aggregation across seeds and grid cells."""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from analysis.compute_cost import CostLedger
from analysis.metrics import MIN_TAIL_SAMPLES, mse, r2_score, tail_mse
from utils.converters import safe_json_dumps
from utils.logger import get_logger

logger = get_logger(__name__)

NO_PERTURBATION = "none"
CELL_KEYS = ["model", "neurons", "epochs", "sparsity", "perturbation"]
ROW_COLUMNS = [
    "run_key", "model", "neurons", "epochs", "seed", "sparsity", "perturbation",
    "r2", "mse", "tail_mse_p90", "n_test", "n_tail", "params", "flops_per_step",
    "flops_total", "wall_seconds", "train_energy_joules", "ks_statistic", "ks_p",
]


class ReportError(ValueError):
    pass


class EvalReport(BaseModel):
    """Everything measured for one (model, neurons, epochs, seed, perturbation) run."""

    model_config = ConfigDict(extra="forbid")

    run_key: str
    config_hash: str
    model_kind: str
    neurons: int
    epochs: int
    seed: int
    sparsity: Optional[float] = None
    perturbation: str = NO_PERTURBATION
    r2: float
    mse: float
    tail_mse_p90: Optional[float] = None
    n_test: int
    n_tail: int = 0
    param_count: int
    flops_per_step: int
    flops_total: int
    train_wall_time: float
    train_energy_joules: Optional[float] = None
    ks_statistic: Optional[float] = None
    ks_p: Optional[float] = None

    @field_validator("r2")
    @classmethod
    def r2_at_most_one(cls, value: float) -> float:
        if not value <= 1.0:
            raise ValueError(f"r2 must be <= 1, got {value}")
        return value

    def to_row(self) -> Dict[str, Any]:
        """Flat CSV row."""
        return {
            "run_key": self.run_key,
            "model": self.model_kind,
            "neurons": self.neurons,
            "epochs": self.epochs,
            "seed": self.seed,
            "sparsity": self.sparsity,
            "perturbation": self.perturbation,
            "r2": self.r2,
            "mse": self.mse,
            "tail_mse_p90": self.tail_mse_p90,
            "n_test": self.n_test,
            "n_tail": self.n_tail,
            "params": self.param_count,
            "flops_per_step": self.flops_per_step,
            "flops_total": self.flops_total,
            "wall_seconds": self.train_wall_time,
            "train_energy_joules": self.train_energy_joules,
            "ks_statistic": self.ks_statistic,
            "ks_p": self.ks_p,
        }


def evaluate_predictions(actual, pred) -> Dict[str, Any]:
    """R2, MSE and the p90 tail MSE; the tail is reported absent below the minimum sample count."""
    actual = np.asarray(actual, dtype=np.float64)
    metrics: Dict[str, Any] = {
        "r2": r2_score(actual, pred),
        "mse": mse(actual, pred),
        "n_test": int(actual.size),
        "tail_mse_p90": None,
        "n_tail": 0,
    }
    if actual.size >= MIN_TAIL_SAMPLES:
        metrics["tail_mse_p90"], metrics["n_tail"] = tail_mse(actual, pred)
    return metrics


def assemble_report(trace, metrics: Dict[str, Any], ledger: CostLedger,
                    identifiers: Dict[str, Any], ks=None) -> EvalReport:
    """Combine one run's trace, test metrics, cost ledger and identifiers."""
    fields = {
        **identifiers,
        "config_hash": trace.config_hash,
        "r2": metrics.get("r2"),
        "mse": metrics.get("mse"),
        "tail_mse_p90": metrics.get("tail_mse_p90"),
        "n_test": metrics.get("n_test"),
        "n_tail": metrics.get("n_tail", 0),
        "param_count": ledger.params,
        "flops_per_step": ledger.flops_per_step,
        "flops_total": ledger.flops_total,
        "train_wall_time": ledger.wall_seconds,
        "train_energy_joules": ledger.external_energy_joules,
    }
    if ks is not None:
        fields["ks_statistic"] = ks.statistic
        fields["ks_p"] = ks.p_value
    try:
        return EvalReport(**fields)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors())
        raise ReportError(f"Incomplete report: {problems}")


def reports_frame(reports: Iterable[Union[EvalReport, Dict[str, Any]]]) -> pd.DataFrame:
    rows = [r.to_row() if isinstance(r, EvalReport) else r for r in reports]
    frame = pd.DataFrame(rows, columns=ROW_COLUMNS)
    for column in ROW_COLUMNS[7:] + ["sparsity"]:
        frame[column] = pd.to_numeric(frame[column], errors="coerce")
    return frame


def _percentile(q: float):
    def agg(values: pd.Series) -> float:
        values = values.dropna()
        return float(np.percentile(values, q)) if len(values) else np.nan
    agg.__name__ = f"p{q:g}"
    return agg


def aggregate_reports(reports: Iterable[Union[EvalReport, Dict[str, Any]]]) -> pd.DataFrame:
    """Mean and 2.5/97.5 percentile band per grid cell across seeds."""
    frame = reports_frame(reports)
    if frame.empty:
        return pd.DataFrame(columns=CELL_KEYS + ["n_seeds"])
    frame["sparsity"] = frame["sparsity"].fillna(-1.0)

    grouped = frame.groupby(CELL_KEYS, sort=True)
    out = grouped.agg(
        n_seeds=("seed", "nunique"),
        r2_mean=("r2", "mean"), r2_lo=("r2", _percentile(2.5)), r2_hi=("r2", _percentile(97.5)),
        mse_mean=("mse", "mean"), mse_lo=("mse", _percentile(2.5)), mse_hi=("mse", _percentile(97.5)),
        tail_mse_mean=("tail_mse_p90", "mean"),
        tail_mse_lo=("tail_mse_p90", _percentile(2.5)),
        tail_mse_hi=("tail_mse_p90", _percentile(97.5)),
        params=("params", "first"),
        flops_total=("flops_total", "first"),
        wall_seconds_mean=("wall_seconds", "mean"),
        ks_statistic=("ks_statistic", "mean"),
        ks_p=("ks_p", "mean"),
    ).reset_index()
    out["sparsity"] = out["sparsity"].where(out["sparsity"] >= 0, None)
    return out


def hp_sensitivity_summary(reports: Iterable[Union[EvalReport, Dict[str, Any]]],
                           main_epochs: Sequence[int] = (50, 100, 200, 400),
                           overtraining_epochs: int = 800) -> Dict[str, Dict[str, Any]]:
    """Per model: spread of cell-mean test R2 over the main grid, its peak, and the over-training drop."""
    cells = aggregate_reports(reports)
    if cells.empty:
        return {}
    cells = cells[cells["perturbation"] == NO_PERTURBATION]

    summary: Dict[str, Dict[str, Any]] = {}
    for model, rows in cells.groupby("model", sort=True):
        main = rows[rows["epochs"].isin(list(main_epochs))]
        if main.empty:
            continue
        peak = main.loc[main["r2_mean"].idxmax()]
        over = rows[rows["epochs"] == overtraining_epochs]
        over_r2 = float(over["r2_mean"].mean()) if not over.empty else None
        summary[model] = {
            "r2_std": float(main["r2_mean"].std(ddof=0)),
            "r2_peak": float(peak["r2_mean"]),
            "peak_neurons": int(peak["neurons"]),
            "peak_epochs": int(peak["epochs"]),
            "cells": int(len(main)),
            "overtraining_r2": over_r2,
            "overtraining_drop": float(peak["r2_mean"]) - over_r2 if over_r2 is not None else None,
        }
    return summary


def evaluation_summary(reports: Iterable[Union[EvalReport, Dict[str, Any]]]) -> pd.DataFrame:
    """Final comparison per model: size, compute, best accuracy, HP sensitivity, robustness drop."""
    reports = list(reports)
    cells = aggregate_reports(reports)
    sensitivity = hp_sensitivity_summary(reports)
    rows = []
    if cells.empty:
        return pd.DataFrame(rows)
    clean = cells[cells["perturbation"] == NO_PERTURBATION]
    for model, model_cells in clean.groupby("model", sort=True):
        best = model_cells.loc[model_cells["r2_mean"].idxmax()]
        row = {
            "model": model,
            "params": int(best["params"]),
            "flops_total": int(best["flops_total"]),
            "best_neurons": int(best["neurons"]),
            "best_epochs": int(best["epochs"]),
            "best_r2": float(best["r2_mean"]),
            "tail_mse_p90": best["tail_mse_mean"],
            "r2_std": sensitivity.get(model, {}).get("r2_std"),
        }
        for kind in ("noise", "drift"):
            perturbed = cells[(cells["model"] == model) & cells["perturbation"].str.startswith(kind)]
            row[f"{kind}_r2_drop"] = (float(best["r2_mean"] - perturbed["r2_mean"].min())
                                      if not perturbed.empty else None)
        rows.append(row)
    return pd.DataFrame(rows)


def write_reports_csv(reports: Iterable[Union[EvalReport, Dict[str, Any]]], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    reports_frame(reports).to_csv(path, index=False)
    return path


def write_json(obj: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(obj, pd.DataFrame):
        obj = obj.to_dict("records")
    elif isinstance(obj, BaseModel):
        obj = obj.model_dump()
    path.write_text(safe_json_dumps(obj))
    return path


def load_report(path: Union[str, Path]) -> EvalReport:
    try:
        return EvalReport(**json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise ReportError(f"Unreadable report {path}: {e}")
