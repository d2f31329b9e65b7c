# training/checkpoint.py
"""Model checkpoints: named parameter arrays plus architecture, config hash and seed."""

from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from models.base import SequenceModel
from models.factory import rebuild_model
from training.trainer import TrainConfig
from utils.containers import ContainerError, read_container, write_container
from utils.logger import get_logger

logger = get_logger(__name__)

CHECKPOINT_FORMAT = "checkpoint/1"


def save_checkpoint(path: Union[str, Path], model: SequenceModel,
                    cfg: Optional[TrainConfig] = None) -> Path:
    meta = {
        "format": CHECKPOINT_FORMAT,
        "model": model.describe(),
        "config": cfg.to_dict() if cfg is not None else None,
        "config_hash": cfg.config_hash() if cfg is not None else None,
        "seed": cfg.seed if cfg is not None else model.describe().get("seed"),
    }
    write_container(path, model.state_dict(), meta)
    logger.info(f"Saved {model.kind} checkpoint to {path}")
    return Path(path)


def load_checkpoint(path: Union[str, Path]) -> Tuple[SequenceModel, Dict[str, Any]]:
    """Rebuild the model architecture and load its parameters exactly."""
    arrays, meta = read_container(path)
    if meta.get("format") != CHECKPOINT_FORMAT:
        raise ContainerError(f"{path} is not a checkpoint (format={meta.get('format')!r})")
    model = rebuild_model(meta["model"])
    model.load_state_dict(arrays)
    return model, meta


def config_from_meta(meta: Dict[str, Any]) -> Optional[TrainConfig]:
    if not meta.get("config"):
        return None
    return TrainConfig(**meta["config"])
