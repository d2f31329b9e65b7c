# experiments/progress_observers.py
"""Observer pattern implementation for sweep progress reporting."""

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from utils.converters import convert_numpy
from utils.datetime_utils import utc_now
from utils.logger import experiment_logger, get_logger

logger = get_logger(__name__)


@dataclass
class ProgressEvent:
    """Represents a progress event during a sweep."""

    event_type: str  # 'started', 'progress', 'completed', 'error'
    message: str
    processed_count: int = 0
    total_count: int = 0
    cached_count: int = 0
    failed_count: int = 0
    progress_percentage: float = 0.0
    timestamp: datetime = None
    metadata: Dict[str, Any] = None

    def __post_init__(self):
        if self.timestamp is None:
            self.timestamp = utc_now()
        if self.metadata is None:
            self.metadata = {}

        if self.progress_percentage == 0.0 and self.total_count > 0:
            self.progress_percentage = (self.processed_count / self.total_count) * 100.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "event_type": self.event_type,
            "message": self.message,
            "processed_count": self.processed_count,
            "total_count": self.total_count,
            "cached_count": self.cached_count,
            "failed_count": self.failed_count,
            "progress_percentage": round(self.progress_percentage, 2),
            "timestamp": self.timestamp.isoformat(),
            **convert_numpy(self.metadata),
        }


class ProgressObserver(ABC):
    """Abstract base class for progress observers."""

    @abstractmethod
    async def on_progress_update(self, event: ProgressEvent) -> None:
        pass

    @abstractmethod
    async def on_sweep_started(self, event: ProgressEvent) -> None:
        pass

    @abstractmethod
    async def on_sweep_completed(self, event: ProgressEvent) -> None:
        pass

    @abstractmethod
    async def on_sweep_error(self, event: ProgressEvent) -> None:
        pass


class LoggingProgressObserver(ProgressObserver):
    """Progress observer that logs updates."""

    def __init__(self, every: int = 10):
        self.every = max(1, every)

    async def on_progress_update(self, event: ProgressEvent) -> None:
        if event.processed_count % self.every == 0 or event.processed_count >= event.total_count:
            experiment_logger.sweep_progress(
                event.processed_count, event.total_count, event.cached_count, event.failed_count)

    async def on_sweep_started(self, event: ProgressEvent) -> None:
        logger.info(f"Sweep started: {event.message} ({event.total_count} runs)")

    async def on_sweep_completed(self, event: ProgressEvent) -> None:
        logger.info(
            f"Sweep completed: {event.message} "
            f"({event.processed_count}/{event.total_count} runs, {event.cached_count} cached, "
            f"{event.failed_count} failed) in {event.metadata.get('duration_seconds', 'unknown')}s"
        )

    async def on_sweep_error(self, event: ProgressEvent) -> None:
        logger.error(f"Sweep error: {event.message}")


class JsonlProgressObserver(ProgressObserver):
    """Appends every event as one JSON line, for offline inspection of long sweeps."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def _append(self, event: ProgressEvent) -> None:
        try:
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")
        except OSError as e:
            logger.warning(f"Failed to write progress event to {self.path}: {e}")

    async def on_progress_update(self, event: ProgressEvent) -> None:
        self._append(event)

    async def on_sweep_started(self, event: ProgressEvent) -> None:
        self._append(event)

    async def on_sweep_completed(self, event: ProgressEvent) -> None:
        self._append(event)

    async def on_sweep_error(self, event: ProgressEvent) -> None:
        self._append(event)


class CompositeProgressObserver(ProgressObserver):
    """Progress observer that delegates to multiple observers."""

    def __init__(self, observers: List[ProgressObserver] = None):
        self.observers = observers or []

    def add_observer(self, observer: ProgressObserver) -> None:
        self.observers.append(observer)

    def remove_observer(self, observer: ProgressObserver) -> None:
        if observer in self.observers:
            self.observers.remove(observer)

    async def _notify(self, method: str, event: ProgressEvent) -> None:
        for observer in self.observers:
            try:
                await getattr(observer, method)(event)
            except Exception as e:
                logger.warning(f"Observer {type(observer).__name__} failed on {method}: {e}")

    async def on_progress_update(self, event: ProgressEvent) -> None:
        await self._notify("on_progress_update", event)

    async def on_sweep_started(self, event: ProgressEvent) -> None:
        await self._notify("on_sweep_started", event)

    async def on_sweep_completed(self, event: ProgressEvent) -> None:
        await self._notify("on_sweep_completed", event)

    async def on_sweep_error(self, event: ProgressEvent) -> None:
        await self._notify("on_sweep_error", event)


class ProgressReporter:
    """Central progress reporter that manages observers."""

    def __init__(self, observer: Optional[ProgressObserver] = None):
        self.observer = observer or CompositeProgressObserver()

    def set_observer(self, observer: ProgressObserver) -> None:
        self.observer = observer

    async def report_progress(self, event: ProgressEvent) -> None:
        if event.event_type == "started":
            await self.observer.on_sweep_started(event)
        elif event.event_type == "completed":
            await self.observer.on_sweep_completed(event)
        elif event.event_type == "error":
            await self.observer.on_sweep_error(event)
        else:
            await self.observer.on_progress_update(event)

    async def report_started(self, message: str, total_count: int = 0, **metadata) -> None:
        await self.report_progress(ProgressEvent(
            event_type="started", message=message, total_count=total_count, metadata=metadata))

    async def report_item_progress(self, message: str, processed: int, total: int,
                                   cached: int = 0, failed: int = 0, **metadata) -> None:
        await self.report_progress(ProgressEvent(
            event_type="progress", message=message, processed_count=processed, total_count=total,
            cached_count=cached, failed_count=failed, metadata=metadata))

    async def report_completed(self, message: str, processed: int = 0, total: int = 0,
                               cached: int = 0, failed: int = 0, **metadata) -> None:
        await self.report_progress(ProgressEvent(
            event_type="completed", message=message, processed_count=processed, total_count=total,
            cached_count=cached, failed_count=failed, progress_percentage=100.0, metadata=metadata))

    async def report_error(self, message: str, **metadata) -> None:
        await self.report_progress(ProgressEvent(event_type="error", message=message, metadata=metadata))


def default_reporter(output_dir: Optional[Union[str, Path]] = None) -> ProgressReporter:
    """Logging observer, plus a progress.jsonl file in `output_dir` when given."""
    observers: List[ProgressObserver] = [LoggingProgressObserver()]
    if output_dir is not None:
        observers.append(JsonlProgressObserver(Path(output_dir) / "progress.jsonl"))
    return ProgressReporter(CompositeProgressObserver(observers))
