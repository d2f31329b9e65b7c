# training/trainer.py
"""Truncated BPTT training with batch size one over a chronological sequence."""

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from analysis.metrics import r2_score
from autodiff import ops
from autodiff.node import Node, backward, no_grad
from data.dataset import Dataset
from models.base import SequenceModel
from models.factory import MODEL_KINDS
from models.ltc import SolverError
from training.losses import is_finite_loss, mse_loss
from training.optimizer import make_optimizer
from utils.logger import experiment_logger, get_logger

logger = get_logger(__name__)

EPOCH_GRID = (50, 100, 200, 400)
OVERTRAINING_EPOCHS = 800
NEURON_GRID = (16, 32, 64, 96)
DEFAULT_LSTM_CLIP_NORM = 1.0


class TrainingError(Exception):
    """Invalid training setup (configuration or dimension mismatch)."""
    pass


class NumericalAbort(TrainingError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, epoch: int, window: int, loss: float, reason: str = "non-finite loss"):
        self.epoch = epoch
        self.window = window
        self.loss = loss
        self.reason = reason
        super().__init__(f"{reason} at epoch {epoch}, window {window}: loss={loss}")

    def __reduce__(self):
        # Crosses process boundaries in the sweep
        return (type(self), (self.epoch, self.window, self.loss, self.reason))


@dataclass
class TrainConfig:
    """One training run. `neuron_count` is the intermediate-layer size (NCP) or hidden size (LSTM)."""

    model_kind: str = "ncp"
    neuron_count: int = 16
    epochs: int = 100
    learning_rate: float = 0.005
    seed: int = 0
    truncation_len: int = 32
    # None: model default (1.0 for LSTM, off otherwise); 0 disables clipping
    clip_norm: Optional[float] = None
    optimizer: str = "adam"
    sparsity: float = 0.9
    ode_unfolds: int = 1
    dt: float = 1.0
    track_test_r2: bool = False

    def validate(self) -> None:
        """Validate configuration values."""
        if self.model_kind not in MODEL_KINDS:
            raise TrainingError(f"model_kind must be one of {MODEL_KINDS}, got {self.model_kind!r}")
        if self.epochs < 1:
            raise TrainingError("epochs must be at least 1")
        if not self.learning_rate > 0:
            raise TrainingError("learning_rate must be positive")
        if self.neuron_count < 1:
            raise TrainingError("neuron_count must be positive")
        if self.truncation_len < 1:
            raise TrainingError("truncation_len must be positive")
        if self.clip_norm is not None and self.clip_norm < 0:
            raise TrainingError("clip_norm cannot be negative")
        if self.optimizer not in ("adam", "sgd"):
            raise TrainingError(f"optimizer must be adam or sgd, got {self.optimizer!r}")
        if not 0.0 <= self.sparsity < 1.0:
            raise TrainingError("sparsity must be in [0, 1)")
        if self.ode_unfolds < 1:
            raise TrainingError("ode_unfolds must be at least 1")
        if not self.dt > 0:
            raise TrainingError("dt must be positive")

    def effective_clip_norm(self) -> Optional[float]:
        if self.clip_norm is None:
            return DEFAULT_LSTM_CLIP_NORM if self.model_kind == "lstm" else None
        return self.clip_norm or None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class TrainTrace:
    """Per-epoch history of one run plus the final parameters."""

    config_hash: str
    train_loss: List[float] = field(default_factory=list)
    test_r2: List[Optional[float]] = field(default_factory=list)
    epoch_seconds: List[float] = field(default_factory=list)
    checkpoint: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def wall_seconds(self) -> float:
        return float(sum(self.epoch_seconds))

    @property
    def final_loss(self) -> float:
        return self.train_loss[-1] if self.train_loss else float("nan")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config_hash": self.config_hash,
            "train_loss": list(self.train_loss),
            "test_r2": list(self.test_r2),
            "epoch_seconds": list(self.epoch_seconds),
        }


def window_bounds(n_rows: int, truncation_len: int) -> List[tuple]:
    """Consecutive [start, stop) windows covering n_rows in order."""
    return [(start, min(start + truncation_len, n_rows)) for start in range(0, n_rows, truncation_len)]


def _check_dims(model: SequenceModel, dataset: Dataset) -> None:
    if model.n_features != dataset.n_features:
        raise TrainingError(
            f"model expects {model.n_features} feature(s), dataset has {dataset.n_features}")
    if dataset.train_idx.size == 0:
        raise TrainingError("dataset has an empty train split")


def window_loss(model: SequenceModel, state: Any, features: np.ndarray, target: np.ndarray):
    """Forward through one window; returns (loss node, final state)."""
    outputs: List[Node] = []
    for row in features:
        state = model.step(state, Node(row))
        outputs.append(model.output(state))
    return mse_loss(ops.concat(outputs), target), state


def train(model: SequenceModel, dataset: Dataset, cfg: TrainConfig,
          on_epoch: Optional[Callable[[int, float], None]] = None) -> TrainTrace:
    """Train `model` in place on the train rows of `dataset` and return the trace."""
    cfg.validate()
    _check_dims(model, dataset)

    features = dataset.train_features
    target = dataset.train_target
    windows = window_bounds(features.shape[0], cfg.truncation_len)
    named = model.named_parameters()
    optimizer = make_optimizer(cfg.optimizer, named, cfg.learning_rate, cfg.effective_clip_norm())
    trace = TrainTrace(config_hash=cfg.config_hash())

    for epoch in range(1, cfg.epochs + 1):
        started = time.perf_counter()
        state = model.initial_state()
        squared_error = 0.0

        for window, (start, stop) in enumerate(windows):
            optimizer.zero_grad()
            try:
                loss, state = window_loss(model, state, features[start:stop], target[start:stop])
            except SolverError as e:
                experiment_logger.numerical_abort(epoch, window, float("nan"), reason=str(e))
                raise NumericalAbort(epoch, window, float("nan"), reason=str(e))

            loss_value = float(loss.value)
            if not is_finite_loss(loss):
                experiment_logger.numerical_abort(epoch, window, loss_value)
                raise NumericalAbort(epoch, window, loss_value)

            backward(loss)
            grads = optimizer.gradients()
            if not all(np.all(np.isfinite(g)) for g in grads.values()):
                experiment_logger.numerical_abort(epoch, window, loss_value, reason="non-finite gradient")
                raise NumericalAbort(epoch, window, loss_value, reason="non-finite gradient")
            optimizer.step()

            state = model.detach_state(state)
            squared_error += loss_value * (stop - start)

        epoch_loss = squared_error / features.shape[0]
        test_r2 = evaluate_r2(model, dataset) if cfg.track_test_r2 else None
        elapsed = time.perf_counter() - started

        trace.train_loss.append(epoch_loss)
        trace.test_r2.append(test_r2)
        trace.epoch_seconds.append(elapsed)
        experiment_logger.epoch_completed(epoch, epoch_loss, elapsed, test_r2)
        if on_epoch is not None:
            on_epoch(epoch, epoch_loss)

    trace.checkpoint = model.state_dict()
    logger.info(f"Trained {model.kind} for {cfg.epochs} epoch(s): final loss {trace.final_loss:.6f}")
    return trace


def predict(model: SequenceModel, features: np.ndarray) -> np.ndarray:
    """Run the model over the whole sequence from the initial state without recording gradients."""
    predictions = np.empty(features.shape[0], dtype=np.float64)
    with no_grad():
        state = model.initial_state()
        for t, row in enumerate(np.asarray(features, dtype=np.float64)):
            state = model.step(state, Node(row))
            predictions[t] = float(model.output(state).value[0])
    return predictions


def predict_test_rows(model: SequenceModel, dataset: Dataset) -> np.ndarray:
    """Predictions at the test rows, with state carried through all preceding rows."""
    return predict(model, dataset.features)[dataset.test_idx]


def evaluate_r2(model: SequenceModel, dataset: Dataset) -> float:
    return r2_score(dataset.test_target, predict_test_rows(model, dataset))
