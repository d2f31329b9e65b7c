# training/losses.py
"""Regression losses on autodiff nodes."""

import numpy as np

from autodiff import ops
from autodiff.node import Node, as_node


class LossError(ValueError):
    """Empty or mismatched loss operands."""
    pass


def mse_loss(pred, actual) -> Node:
    """Mean of squared residuals; differentiable in `pred`."""
    pred, actual = as_node(pred), as_node(actual)
    if pred.value.size == 0:
        raise LossError("mse_loss on empty input")
    if pred.shape != actual.shape:
        raise LossError(f"mse_loss: prediction shape {pred.shape} != target shape {actual.shape}")
    return ops.mean(ops.square(ops.sub(pred, actual)))


def is_finite_loss(loss: Node) -> bool:
    return bool(np.all(np.isfinite(loss.value)))
