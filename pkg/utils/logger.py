# utils/logger.py
"""Logging utilities: structured JSON formatting and experiment event loggers."""

import logging
from datetime import datetime, timezone
from typing import Any, Dict, Optional

from pythonjsonlogger import jsonlogger


class StructuredFormatter(jsonlogger.JsonFormatter):
    """JSON-lines formatter carrying module/function context and `extra=` fields."""

    def __init__(self, *args, **kwargs):
        kwargs.setdefault("json_default", str)
        super().__init__("%(levelname)s %(name)s %(message)s", *args, **kwargs)

    def add_fields(self, log_record: Dict[str, Any], record: logging.LogRecord,
                   message_dict: Dict[str, Any]) -> None:
        super().add_fields(log_record, record, message_dict)
        log_record["timestamp"] = datetime.now(timezone.utc).isoformat()
        log_record["level"] = log_record.pop("levelname", record.levelname)
        log_record["logger"] = log_record.pop("name", record.name)
        log_record["module"] = record.module
        log_record["function"] = record.funcName
        log_record["line"] = record.lineno


class ExperimentLogger:
    """Specialized logger for training and sweep events."""

    def __init__(self, name: str):
        self.logger = logging.getLogger(name)

    def run_started(self, run_key: str, model_kind: str, neurons: int, epochs: int,
                    seed: int, **kwargs):
        """Log the start of a training run."""
        self.logger.info(
            f"Run started: {model_kind} neurons={neurons} epochs={epochs} seed={seed}",
            extra={
                "event_type": "run_started",
                "run_key": run_key,
                "model_kind": model_kind,
                "neurons": neurons,
                "epochs": epochs,
                "seed": seed,
                **kwargs
            }
        )

    def epoch_completed(self, epoch: int, train_loss: float, wall_seconds: float,
                        test_r2: Optional[float] = None, **kwargs):
        """Log one finished epoch."""
        self.logger.debug(
            f"Epoch {epoch}: loss={train_loss:.6f}",
            extra={
                "event_type": "epoch_completed",
                "epoch": epoch,
                "train_loss": train_loss,
                "test_r2": test_r2,
                "wall_seconds": wall_seconds,
                **kwargs
            }
        )

    def run_completed(self, run_key: str, r2: float, mse: float, wall_seconds: float, **kwargs):
        """Log a finished and evaluated run."""
        self.logger.info(
            f"Run completed: r2={r2:.4f} mse={mse:.4f} in {wall_seconds:.1f}s",
            extra={
                "event_type": "run_completed",
                "run_key": run_key,
                "r2": r2,
                "mse": mse,
                "wall_seconds": wall_seconds,
                **kwargs
            }
        )

    def numerical_abort(self, epoch: int, window: int, loss: float, **kwargs):
        """Log a training run aborted on a non-finite loss."""
        self.logger.error(
            f"Numerical abort at epoch {epoch}, window {window}: loss={loss}",
            extra={
                "event_type": "numerical_abort",
                "epoch": epoch,
                "window": window,
                "loss": loss,
                **kwargs
            }
        )

    def sweep_progress(self, completed: int, total: int, cached: int = 0, failed: int = 0):
        """Log sweep progress."""
        self.logger.info(
            f"Sweep progress: {completed}/{total} (cached {cached}, failed {failed})",
            extra={
                "event_type": "sweep_progress",
                "completed": completed,
                "total": total,
                "cached": cached,
                "failed": failed,
            }
        )


class PerformanceLogger:
    """Logger for timing of expensive operations."""

    def __init__(self, name: str):
        self.logger = logging.getLogger(f"{name}.performance")

    def execution_time(self, operation: str, duration: float, details: dict = None):
        """Log operation execution time."""
        self.logger.info(
            f"Operation timing: {operation} took {duration:.3f}s",
            extra={
                "event_type": "performance",
                "operation": operation,
                "duration_seconds": duration,
                "details": details or {}
            }
        )


def get_logger(name: str) -> logging.Logger:
    """Get a module logger."""
    return logging.getLogger(name)


# Common loggers
experiment_logger = ExperimentLogger("experiments")
performance_logger = PerformanceLogger("performance")
