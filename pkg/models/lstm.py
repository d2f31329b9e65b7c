# models/lstm.py
"""Single-layer LSTM baseline with a linear readout.

Gates are stacked in the order input, forget, cell, output:

    z = W x + U h + b
    i, f, o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o);  g = tanh(z_g)
    c+ = f * c + i * g
    h+ = o * tanh(c+)
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from autodiff import ops
from autodiff.node import Node, as_node, parameter
from models.base import SequenceModel
from models.readout import Readout, glorot_uniform
from models.wiring import lstm_flops_per_step
from utils.logger import get_logger

logger = get_logger(__name__)

FORGET_BIAS = 1.0


class LstmError(ValueError):
    """Input dimension mismatch or non-finite values in the LSTM."""
    pass


@dataclass
class LstmParams:
    W: Node  # (4H, F)
    U: Node  # (4H, H)
    b: Node  # (4H,)
    hidden_dim: int

    def __post_init__(self):
        h = self.hidden_dim
        if self.W.shape[0] != 4 * h or self.U.shape != (4 * h, h) or self.b.shape != (4 * h,):
            raise LstmError(
                f"Inconsistent LSTM shapes W={self.W.shape} U={self.U.shape} b={self.b.shape} "
                f"for hidden_dim={h}")

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    @classmethod
    def initialize(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator) -> "LstmParams":
        """Glorot-uniform projections per gate, zero biases except forget = +1."""
        W = np.concatenate([glorot_uniform(rng, hidden_dim, input_dim) for _ in range(4)])
        U = np.concatenate([glorot_uniform(rng, hidden_dim, hidden_dim) for _ in range(4)])
        b = np.zeros(4 * hidden_dim)
        b[hidden_dim:2 * hidden_dim] = FORGET_BIAS
        return cls.from_arrays(W, U, b)

    @classmethod
    def from_arrays(cls, W, U, b) -> "LstmParams":
        b = np.asarray(b, dtype=np.float64)
        return cls(parameter(W, "lstm.W"), parameter(U, "lstm.U"), parameter(b, "lstm.b"),
                   hidden_dim=b.shape[0] // 4)

    def named_parameters(self) -> Dict[str, Node]:
        return {"lstm.W": self.W, "lstm.U": self.U, "lstm.b": self.b}


@dataclass
class LstmState:
    h: Node
    c: Node

    def detach(self) -> "LstmState":
        return LstmState(self.h.detach(), self.c.detach())


def lstm_step(state: LstmState, inputs, params: LstmParams) -> LstmState:
    """One canonical LSTM update."""
    inputs = as_node(inputs)
    if inputs.shape != (params.input_dim,):
        raise LstmError(f"input has shape {inputs.shape}, expected ({params.input_dim},)")
    if not np.all(np.isfinite(inputs.value)):
        raise LstmError("non-finite LSTM input")

    h = params.hidden_dim
    z = ops.add(ops.add(ops.matmul(params.W, inputs), ops.matmul(params.U, state.h)), params.b)
    i = ops.sigmoid(ops.index(z, slice(0, h)))
    f = ops.sigmoid(ops.index(z, slice(h, 2 * h)))
    g = ops.tanh(ops.index(z, slice(2 * h, 3 * h)))
    o = ops.sigmoid(ops.index(z, slice(3 * h, 4 * h)))

    c_next = ops.add(ops.mul(f, state.c), ops.mul(i, g))
    h_next = ops.mul(o, ops.tanh(c_next))
    return LstmState(h_next, c_next)


class LstmModel(SequenceModel):
    """LSTM cell of `hidden_dim` units followed by a linear readout of h."""

    kind = "lstm"

    def __init__(self, n_features: int, hidden_dim: int, seed: int = 0,
                 params: Optional[LstmParams] = None):
        super().__init__(n_features)
        rng = np.random.default_rng(seed)
        self.hidden_dim = hidden_dim
        self.seed = seed
        self.params = params or LstmParams.initialize(n_features, hidden_dim, rng)
        self.readout = Readout.initialize(hidden_dim, 1, rng)

    def named_parameters(self) -> Dict[str, Node]:
        return {**self.params.named_parameters(), **self.readout.named_parameters()}

    def initial_state(self) -> LstmState:
        return LstmState(Node(np.zeros(self.hidden_dim)), Node(np.zeros(self.hidden_dim)))

    def step(self, state: LstmState, inputs, dt: Optional[float] = None) -> LstmState:
        return lstm_step(state, inputs, self.params)

    def output(self, state: LstmState) -> Node:
        return self.readout(state.h)

    def detach_state(self, state: LstmState) -> LstmState:
        return state.detach()

    def flops_per_step(self) -> int:
        return lstm_flops_per_step(self.n_features, self.hidden_dim)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "n_features": self.n_features,
                "neurons": self.hidden_dim, "seed": self.seed}
