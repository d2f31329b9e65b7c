# Reverse-mode automatic differentiation over float64 arrays
from autodiff.node import (
    AutodiffError,
    Node,
    ShapeError,
    as_node,
    backward,
    grad_enabled,
    no_grad,
    parameter,
)

__all__ = [
    "AutodiffError",
    "Node",
    "ShapeError",
    "as_node",
    "backward",
    "grad_enabled",
    "no_grad",
    "parameter",
]
