# BPTT training: losses, optimizers, trainer and checkpoints
from training.losses import LossError, mse_loss
from training.optimizer import AdamOptimizer, AdamState, SgdOptimizer, adam_update, clip_grad_norm
from training.trainer import (
    NumericalAbort,
    TrainConfig,
    TrainingError,
    TrainTrace,
    predict,
    train,
)

__all__ = [
    "AdamOptimizer",
    "AdamState",
    "LossError",
    "NumericalAbort",
    "SgdOptimizer",
    "TrainConfig",
    "TrainTrace",
    "TrainingError",
    "adam_update",
    "clip_grad_norm",
    "mse_loss",
    "predict",
    "train",
]
