# models/base.py
"""Common interface of the trainable sequence models (NCP/CT-RNN and LSTM)."""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

import numpy as np

from autodiff.node import Node


class ModelError(ValueError):
    """Parameter set or dimensions do not match the model."""
    pass


class SequenceModel(ABC):
    """A recurrent cell plus linear readout, stepped one sample at a time."""

    kind: str = "base"

    def __init__(self, n_features: int):
        self.n_features = n_features

    @abstractmethod
    def named_parameters(self) -> Dict[str, Node]:
        """Trainable leaves keyed by stable names."""

    @abstractmethod
    def initial_state(self) -> Any:
        pass

    @abstractmethod
    def step(self, state: Any, inputs: Node, dt: Optional[float] = None) -> Any:
        """Advance the recurrent state by one sample."""

    @abstractmethod
    def output(self, state: Any) -> Node:
        """Readout of the current state, shape (1,)."""

    @abstractmethod
    def detach_state(self, state: Any) -> Any:
        pass

    @abstractmethod
    def flops_per_step(self) -> int:
        pass

    @abstractmethod
    def describe(self) -> Dict[str, Any]:
        """Constructor arguments needed to rebuild the same architecture."""

    def parameters(self):
        return list(self.named_parameters().values())

    def param_count(self) -> int:
        return int(sum(p.value.size for p in self.parameters()))

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.value.copy() for name, p in self.named_parameters().items()}

    def load_state_dict(self, arrays: Dict[str, np.ndarray]) -> None:
        params = self.named_parameters()
        missing = sorted(set(params) - set(arrays))
        unexpected = sorted(set(arrays) - set(params))
        if missing or unexpected:
            raise ModelError(f"State mismatch: missing={missing} unexpected={unexpected}")
        for name, p in params.items():
            value = np.asarray(arrays[name], dtype=np.float64)
            if value.shape != p.value.shape:
                raise ModelError(f"{name}: shape {value.shape} != {p.value.shape}")
            p.value = value.copy()
            p.zero_grad()
