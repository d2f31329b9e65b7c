# autodiff/gradcheck.py
"""Central finite-difference checks for reverse-mode gradients."""

from typing import Callable, List, Sequence

import numpy as np

from autodiff.node import Node, backward, no_grad, parameter


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Norm-relative error ||a - n|| / max(||a||, ||n||, 1e-12)."""
    analytic = np.asarray(analytic, dtype=np.float64).ravel()
    numeric = np.asarray(numeric, dtype=np.float64).ravel()
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


def numerical_gradients(fn: Callable[..., Node], inputs: Sequence[np.ndarray],
                        eps: float = 1e-5) -> List[np.ndarray]:
    """d fn / d input for every input by central differences."""
    values = [np.array(x, dtype=np.float64, copy=True) for x in inputs]
    grads = []
    with no_grad():
        for value in values:
            grad = np.zeros_like(value)
            flat, flat_grad = value.reshape(-1), grad.reshape(-1)
            for k in range(flat.size):
                original = flat[k]
                flat[k] = original + eps
                upper = float(fn(*[Node(v) for v in values]).value)
                flat[k] = original - eps
                lower = float(fn(*[Node(v) for v in values]).value)
                flat[k] = original
                flat_grad[k] = (upper - lower) / (2.0 * eps)
            grads.append(grad)
    return grads


def analytic_gradients(fn: Callable[..., Node], inputs: Sequence[np.ndarray]) -> List[np.ndarray]:
    """Reverse-mode gradients of fn at inputs."""
    leaves = [parameter(x) for x in inputs]
    backward(fn(*leaves))
    return [leaf.grad for leaf in leaves]


def gradcheck(fn: Callable[..., Node], inputs: Sequence[np.ndarray], eps: float = 1e-5) -> float:
    """Largest relative error between reverse-mode and finite-difference gradients."""
    analytic = analytic_gradients(fn, inputs)
    numeric = numerical_gradients(fn, inputs, eps)
    return max(relative_error(a, n) for a, n in zip(analytic, numeric))
