# training/optimizer.py
"""Adam and SGD updates over named parameter arrays, plus global-norm clipping."""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from autodiff.node import Node

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class OptimizerError(ValueError):
    pass


@dataclass
class AdamState:
    """First/second moment estimates per parameter name and the step counter."""

    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_update(params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], state: AdamState,
                lr: float, beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2,
                eps: float = ADAM_EPS) -> Dict[str, np.ndarray]:
    """One bias-corrected Adam step. Returns new arrays; `state` is advanced in place."""
    state.t += 1
    correction1 = 1.0 - beta1 ** state.t
    correction2 = 1.0 - beta2 ** state.t

    updated = {}
    for name, value in params.items():
        grad = grads[name]
        if grad.shape != value.shape:
            raise OptimizerError(f"{name}: gradient shape {grad.shape} != parameter shape {value.shape}")
        m = beta1 * state.m.get(name, np.zeros_like(value)) + (1.0 - beta1) * grad
        v = beta2 * state.v.get(name, np.zeros_like(value)) + (1.0 - beta2) * grad * grad
        state.m[name], state.v[name] = m, v
        m_hat = m / correction1
        v_hat = v / correction2
        updated[name] = value - lr * m_hat / (np.sqrt(v_hat) + eps)
    return updated


def sgd_update(params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray],
               lr: float) -> Dict[str, np.ndarray]:
    return {name: value - lr * grads[name] for name, value in params.items()}


def global_norm(grads: Dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_grad_norm(grads: Dict[str, np.ndarray],
                   max_norm: Optional[float]) -> Tuple[Dict[str, np.ndarray], float]:
    """Rescale all gradients together so their global L2 norm is at most max_norm."""
    norm = global_norm(grads)
    if max_norm is None or norm <= max_norm or norm == 0.0:
        return grads, norm
    factor = max_norm / norm
    return {name: g * factor for name, g in grads.items()}, norm


class Optimizer:
    """Applies an update rule to the `.value` of named parameter nodes using their `.grad`."""

    def __init__(self, named_params: Dict[str, Node], lr: float, clip_norm: Optional[float] = None):
        if lr < 0:
            raise OptimizerError(f"learning rate cannot be negative, got {lr}")
        self.named_params = named_params
        self.lr = lr
        self.clip_norm = clip_norm
        self.last_grad_norm = 0.0

    def zero_grad(self) -> None:
        for p in self.named_params.values():
            p.zero_grad()

    def gradients(self) -> Dict[str, np.ndarray]:
        return {
            name: p.grad if p.grad is not None else np.zeros_like(p.value)
            for name, p in self.named_params.items()
        }

    def step(self) -> None:
        grads, self.last_grad_norm = clip_grad_norm(self.gradients(), self.clip_norm)
        params = {name: p.value for name, p in self.named_params.items()}
        for name, value in self._update(params, grads).items():
            self.named_params[name].value = value

    def _update(self, params, grads):
        raise NotImplementedError


class AdamOptimizer(Optimizer):
    def __init__(self, named_params: Dict[str, Node], lr: float, clip_norm: Optional[float] = None):
        super().__init__(named_params, lr, clip_norm)
        self.state = AdamState()

    def _update(self, params, grads):
        return adam_update(params, grads, self.state, self.lr)


class SgdOptimizer(Optimizer):
    def _update(self, params, grads):
        return sgd_update(params, grads, self.lr)


def make_optimizer(name: str, named_params: Dict[str, Node], lr: float,
                   clip_norm: Optional[float] = None) -> Optimizer:
    if name == "adam":
        return AdamOptimizer(named_params, lr, clip_norm)
    if name == "sgd":
        return SgdOptimizer(named_params, lr, clip_norm)
    raise OptimizerError(f"Unknown optimizer: {name!r}")
