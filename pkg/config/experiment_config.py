# config/experiment_config.py
"""Experiment configuration: one JSON file describing data, grid and perturbations.

Example:

    {
      "name": "grid",
      "dataset": {"source": "synthetic", "rows": 2000, "seed": 1},
      "models": {"kinds": ["ncp", "lstm"], "neurons": [16, 32], "epochs": [50, 100], "seeds": [0]},
      "perturbations": {"noise": [0.025, 0.05, 0.1], "drift": [0.01, 0.05, 0.075]},
      "output_dir": "runs/grid"
    }
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from models.factory import MODEL_KINDS
from training.trainer import TrainConfig
from utils.logger import get_logger

logger = get_logger(__name__)


class ConfigError(Exception):
    """Invalid experiment configuration; message lists each offending field."""

    def __init__(self, message: str, errors: Optional[List[str]] = None):
        self.errors = errors or []
        super().__init__(message)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DatasetSource(_Section):
    source: Literal["synthetic", "csv", "container"] = "synthetic"
    rows: int = Field(2000, ge=96)
    n_features: int = Field(6, ge=1)
    seed: int = Field(0, ge=0)
    noise_variance: float = Field(0.1765, ge=0)
    drift: float = 0.1
    csv_dir: Optional[str] = None
    site: Optional[str] = None
    path: Optional[str] = None

    @model_validator(mode="after")
    def source_paths(self) -> "DatasetSource":
        if self.source == "csv" and not self.csv_dir:
            raise ValueError("csv_dir is required for source 'csv'")
        if self.source == "container" and not self.path:
            raise ValueError("path is required for source 'container'")
        return self


class PipelineOptions(_Section):
    train_fraction: float = Field(0.65, gt=0, lt=1)
    test_fraction: float = Field(0.30, gt=0, lt=1)
    k_candidates: List[int] = Field(default_factory=lambda: [2, 3, 4, 5, 6])
    forced_k: Optional[int] = Field(None, ge=1)
    cluster_seed: int = 0
    low_drift_only: bool = True
    unit_types: Optional[List[str]] = None

    @model_validator(mode="after")
    def fractions_fit(self) -> "PipelineOptions":
        if self.train_fraction + self.test_fraction > 1.0 + 1e-12:
            raise ValueError("train_fraction + test_fraction must not exceed 1")
        if any(k < 1 for k in self.k_candidates):
            raise ValueError("k_candidates must be positive")
        return self


class ModelGrid(_Section):
    kinds: List[str] = Field(default_factory=lambda: ["ncp", "lstm"])
    neurons: List[int] = Field(default_factory=lambda: [16, 32, 64, 96])
    epochs: List[int] = Field(default_factory=lambda: [50, 100, 200, 400])
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    sparsities: List[float] = Field(default_factory=lambda: [0.9])
    overtraining: bool = True
    overtraining_epochs: int = Field(800, ge=1)
    overtraining_neurons: List[int] = Field(default_factory=lambda: [16])
    learning_rate: float = Field(0.005, gt=0)
    truncation_len: int = Field(32, ge=1)
    clip_norm: Optional[float] = Field(None, ge=0)
    optimizer: Literal["adam", "sgd"] = "adam"
    ode_unfolds: int = Field(1, ge=1)
    dt: float = Field(1.0, gt=0)

    @field_validator("kinds")
    @classmethod
    def known_kinds(cls, kinds: List[str]) -> List[str]:
        unknown = [k for k in kinds if k not in MODEL_KINDS]
        if unknown or not kinds:
            raise ValueError(f"kinds must be a non-empty subset of {list(MODEL_KINDS)}, got {kinds}")
        return kinds

    @field_validator("neurons", "epochs", "overtraining_neurons")
    @classmethod
    def positive_values(cls, values: List[int]) -> List[int]:
        if any(v < 1 for v in values):
            raise ValueError("values must be positive")
        return values

    @field_validator("sparsities")
    @classmethod
    def sparsity_range(cls, values: List[float]) -> List[float]:
        if not values or any(not 0.0 <= v < 1.0 for v in values):
            raise ValueError("sparsities must be non-empty and in [0, 1)")
        return values


class PerturbationGrid(_Section):
    enabled: bool = True
    noise: List[float] = Field(default_factory=lambda: [0.025, 0.05, 0.1])
    drift: List[float] = Field(default_factory=lambda: [0.01, 0.05, 0.075])
    noise_target: Literal["features", "label"] = "features"
    drift_target: Literal["features", "label"] = "label"
    seed: int = 0

    @field_validator("noise", "drift")
    @classmethod
    def non_negative(cls, values: List[float]) -> List[float]:
        if any(v < 0 for v in values):
            raise ValueError("epsilon values cannot be negative")
        return values


class RunSpec(_Section):
    """One grid cell: a single training run."""

    model_kind: str
    neurons: int
    epochs: int
    seed: int
    sparsity: float = 0.9


class ExperimentConfig(_Section):
    name: str = "experiment"
    dataset: DatasetSource = Field(default_factory=DatasetSource)
    pipeline: PipelineOptions = Field(default_factory=PipelineOptions)
    models: ModelGrid = Field(default_factory=ModelGrid)
    perturbations: PerturbationGrid = Field(default_factory=PerturbationGrid)
    output_dir: str = "runs"
    workers: Optional[int] = Field(None, ge=1)

    def run_grid(self) -> List[RunSpec]:
        """Cross product kinds x neurons x epochs x sparsities x seeds, plus the over-training cells."""
        grid = self.models
        cells = [(n, e) for n in grid.neurons for e in grid.epochs]
        if grid.overtraining:
            cells += [(n, grid.overtraining_epochs) for n in grid.overtraining_neurons
                      if (n, grid.overtraining_epochs) not in cells]
        runs = []
        for kind in grid.kinds:
            for neurons, epochs in cells:
                sparsities = grid.sparsities if kind != "lstm" else grid.sparsities[:1]
                for sparsity in sparsities:
                    for seed in grid.seeds:
                        runs.append(RunSpec(model_kind=kind, neurons=neurons, epochs=epochs,
                                            seed=seed, sparsity=sparsity))
        return runs

    def dataset_key(self) -> str:
        return _sha256({"dataset": self.dataset.model_dump(), "pipeline": self.pipeline.model_dump()})

    def run_key(self, run: RunSpec, perturbation: Optional[Dict[str, Any]] = None) -> str:
        """Key of one run: dataset, pipeline, shared training options, the grid cell and any perturbation."""
        shared = self.models.model_dump(include={
            "learning_rate", "truncation_len", "clip_norm", "optimizer", "ode_unfolds", "dt"})
        document = {
            "dataset": self.dataset.model_dump(),
            "pipeline": self.pipeline.model_dump(),
            "training": shared,
            "run": run.model_dump(),
        }
        if perturbation is not None:
            document["perturbation"] = perturbation
        return _sha256(document)

    def train_config(self, run: RunSpec) -> TrainConfig:
        """TrainConfig for one grid cell."""
        grid = self.models
        return TrainConfig(
            model_kind=run.model_kind,
            neuron_count=run.neurons,
            epochs=run.epochs,
            learning_rate=grid.learning_rate,
            seed=run.seed,
            truncation_len=grid.truncation_len,
            clip_norm=grid.clip_norm,
            optimizer=grid.optimizer,
            sparsity=run.sparsity,
            ode_unfolds=grid.ode_unfolds,
            dt=grid.dt,
        )

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump()


def _sha256(document: Dict[str, Any]) -> str:
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _format_errors(error: ValidationError) -> List[str]:
    return [f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in error.errors()]


def parse_experiment_config(document: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as e:
        errors = _format_errors(e)
        raise ConfigError("Invalid experiment configuration:\n" + "\n".join(f"- {x}" for x in errors), errors)


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read and validate a JSON experiment file."""
    path = Path(path)
    try:
        document = json.loads(path.read_text())
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}")
    if not isinstance(document, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    config = parse_experiment_config(document)
    logger.debug(f"Loaded experiment config {config.name!r} from {path}")
    return config
