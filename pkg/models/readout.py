# models/readout.py
"""Linear readout from a cell's output neurons to the scalar target."""

from dataclasses import dataclass
from typing import Dict

import numpy as np

from autodiff import ops
from autodiff.node import Node, parameter


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


@dataclass
class Readout:
    """y = W h + b with W of shape (output_dim, input_dim)."""

    weight: Node
    bias: Node

    @classmethod
    def initialize(cls, input_dim: int, output_dim: int, rng: np.random.Generator) -> "Readout":
        return cls(
            weight=parameter(glorot_uniform(rng, output_dim, input_dim), "readout.weight"),
            bias=parameter(np.zeros(output_dim), "readout.bias"),
        )

    def __call__(self, hidden: Node) -> Node:
        return ops.add(ops.matmul(self.weight, hidden), self.bias)

    def named_parameters(self) -> Dict[str, Node]:
        return {"readout.weight": self.weight, "readout.bias": self.bias}
