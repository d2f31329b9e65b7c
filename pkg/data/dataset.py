# data/dataset.py
"""Packaged multivariate time series: scaled features, target, timestamps, scaler and split."""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from utils.containers import ContainerError, read_container, write_container
from utils.logger import get_logger
from utils.validators import ArrayValidator, ValidationError

logger = get_logger(__name__)

TARGET_COLUMN = "energy"
DATASET_FORMAT = "energy-dataset/1"


@dataclass
class StandardScaler:
    """Per-column (mean, std) fitted on the train rows; population std."""

    columns: List[str]
    mean: np.ndarray
    std: np.ndarray

    def transform(self, values: np.ndarray, column: Optional[str] = None) -> np.ndarray:
        """Scale a (T, k) block of all columns, or a single named column."""
        if column is not None:
            k = self.columns.index(column)
            return (np.asarray(values, dtype=np.float64) - self.mean[k]) / self.std[k]
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std

    def inverse(self, values: np.ndarray, column: str) -> np.ndarray:
        k = self.columns.index(column)
        return np.asarray(values, dtype=np.float64) * self.std[k] + self.mean[k]

    def to_dict(self) -> Dict[str, Any]:
        return {"columns": list(self.columns), "mean": self.mean.tolist(), "std": self.std.tolist()}


@dataclass
class Dataset:
    """Features (T, F), target (T,), timestamps (T,) and chronological split indices."""

    features: np.ndarray
    target: np.ndarray
    timestamps: np.ndarray
    feature_names: List[str]
    train_idx: np.ndarray
    test_idx: np.ndarray
    scaler: Optional[StandardScaler] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.target = np.asarray(self.target, dtype=np.float64)
        self.timestamps = np.asarray(self.timestamps, dtype="datetime64[ns]")
        self.train_idx = np.asarray(self.train_idx, dtype=np.int64)
        self.test_idx = np.asarray(self.test_idx, dtype=np.int64)

    @property
    def n_rows(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def train_features(self) -> np.ndarray:
        return self.features[self.train_idx]

    @property
    def train_target(self) -> np.ndarray:
        return self.target[self.train_idx]

    @property
    def test_features(self) -> np.ndarray:
        return self.features[self.test_idx]

    @property
    def test_target(self) -> np.ndarray:
        return self.target[self.test_idx]

    def validate(self) -> None:
        """Shapes agree, no missing values, split indices in range."""
        try:
            ArrayValidator.require_shape(self.features, (None, len(self.feature_names)), "features")
            ArrayValidator.require_shape(self.target, (self.n_rows,), "target")
            ArrayValidator.require_shape(self.timestamps, (self.n_rows,), "timestamps")
            ArrayValidator.require_finite(self.features, "features")
            ArrayValidator.require_finite(self.target, "target")
        except ValidationError as e:
            raise ContainerError(f"Invalid dataset: {e}")
        for name, idx in (("train_idx", self.train_idx), ("test_idx", self.test_idx)):
            if idx.size and (idx.min() < 0 or idx.max() >= self.n_rows):
                raise ContainerError(f"Invalid dataset: {name} out of range")

    def with_values(self, features: Optional[np.ndarray] = None, target: Optional[np.ndarray] = None,
                    **meta) -> "Dataset":
        """Copy with replaced feature/target arrays and merged metadata."""
        return replace(
            self,
            features=self.features.copy() if features is None else features,
            target=self.target.copy() if target is None else target,
            meta={**self.meta, **meta},
        )

    def save(self, path: Union[str, Path]) -> Path:
        self.validate()
        arrays = {
            "features": self.features,
            "target": self.target,
            "timestamps": self.timestamps.astype(np.int64),
            "train_idx": self.train_idx,
            "test_idx": self.test_idx,
        }
        if self.scaler is not None:
            arrays["scaler_mean"] = self.scaler.mean
            arrays["scaler_std"] = self.scaler.std
        meta = {
            "format": DATASET_FORMAT,
            "feature_names": list(self.feature_names),
            "scaler_columns": list(self.scaler.columns) if self.scaler is not None else None,
            "meta": self.meta,
        }
        write_container(path, arrays, meta)
        logger.info(f"Saved dataset {path}: {self.n_rows} rows x {self.n_features} features")
        return Path(path)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Dataset":
        arrays, meta = read_container(path)
        if meta.get("format") != DATASET_FORMAT:
            raise ContainerError(f"{path} is not a dataset container (format={meta.get('format')!r})")
        try:
            scaler = None
            if meta.get("scaler_columns") is not None:
                scaler = StandardScaler(meta["scaler_columns"], arrays["scaler_mean"], arrays["scaler_std"])
            dataset = cls(
                features=arrays["features"],
                target=arrays["target"],
                timestamps=arrays["timestamps"].astype("datetime64[ns]"),
                feature_names=list(meta["feature_names"]),
                train_idx=arrays["train_idx"],
                test_idx=arrays["test_idx"],
                scaler=scaler,
                meta=meta.get("meta") or {},
            )
        except KeyError as e:
            raise ContainerError(f"{path} is missing dataset member {e}")
        dataset.validate()
        return dataset
