# models/ltc.py
"""Liquid time-constant neurons over a sparse wiring, with a fused semi-implicit solver.

Continuous dynamics per neuron i:

    dx_i/dt = -x_i / tau_i + sum_j f_ij(x_j) (A_ij - x_i) + sum_k f_in,ik(I_k) (A_in,ik - x_i)
    f(v) = w * sigmoid(gamma * (v - mu)),  w >= 0

The fused step treats the state-dependent decay implicitly:

    x+ = (x + dt * sum f A) / (1 + dt * (1/tau + sum f))

which is a convex combination of x, the reversal values A and zero, so
|x+| <= max(|x|, max|A|) for any dt > 0.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from autodiff import ops
from autodiff.node import Node, as_node, no_grad, parameter
from models.base import SequenceModel
from models.readout import Readout
from models.wiring import Wiring, ncp_flops_per_step
from utils.logger import get_logger

logger = get_logger(__name__)

# Lower bound added to the softplus time constant
TAU_FLOOR = 1e-6

TAU_INIT_RANGE = (0.5, 2.0)
WEIGHT_INIT_RANGE = (0.01, 1.0)
SLOPE_INIT_RANGE = (0.5, 1.5)
OFFSET_INIT_RANGE = (-0.3, 0.3)

EDGE_PARAMS = ("weight", "slope", "offset", "reversal")


class SolverError(ValueError):
    """Invalid step size or non-finite state/input in the ODE solver."""
    pass


def inverse_softplus(y: np.ndarray) -> np.ndarray:
    """Raw value whose softplus is y (y > 0)."""
    y = np.asarray(y, dtype=np.float64)
    with np.errstate(over="ignore", divide="ignore"):
        return np.where(y > 30.0, y, np.log(np.expm1(np.minimum(y, 30.0))))


@dataclass
class LtcCellParams:
    """Trainable LTC parameters stored per neuron (tau) and per existing edge.

    tau and the synaptic weights are kept as raw values and mapped through
    softplus, so tau > 0 and weight >= 0 hold for any raw value.
    """

    wiring: Wiring
    tau_raw: Node
    weight_raw: Node
    slope: Node
    offset: Node
    reversal: Node
    in_weight_raw: Node
    in_slope: Node
    in_offset: Node
    in_reversal: Node

    @property
    def tau(self) -> Node:
        return ops.add(ops.softplus(self.tau_raw), TAU_FLOOR)

    @property
    def weight(self) -> Node:
        return ops.softplus(self.weight_raw)

    @property
    def in_weight(self) -> Node:
        return ops.softplus(self.in_weight_raw)

    def named_parameters(self) -> Dict[str, Node]:
        return {
            "ltc.tau_raw": self.tau_raw,
            "ltc.weight_raw": self.weight_raw,
            "ltc.slope": self.slope,
            "ltc.offset": self.offset,
            "ltc.reversal": self.reversal,
            "ltc.in_weight_raw": self.in_weight_raw,
            "ltc.in_slope": self.in_slope,
            "ltc.in_offset": self.in_offset,
            "ltc.in_reversal": self.in_reversal,
        }

    @classmethod
    def initialize(cls, wiring: Wiring, rng: np.random.Generator) -> "LtcCellParams":
        """Random initialization; reversal signs follow edge polarity."""
        def edge_set(count: int, polarity: np.ndarray):
            return (
                inverse_softplus(rng.uniform(*WEIGHT_INIT_RANGE, size=count)),
                rng.uniform(*SLOPE_INIT_RANGE, size=count),
                rng.uniform(*OFFSET_INIT_RANGE, size=count),
                polarity * np.abs(rng.standard_normal(count)),
            )

        tau = rng.uniform(*TAU_INIT_RANGE, size=wiring.neuron_count)
        w, g, m, a = edge_set(wiring.edge_count, wiring.polarity)
        iw, ig, im, ia = edge_set(wiring.sensory_edge_count, wiring.sensory_polarity)
        return cls.from_raw(wiring, inverse_softplus(tau - TAU_FLOOR), w, g, m, a, iw, ig, im, ia)

    @classmethod
    def from_raw(cls, wiring: Wiring, tau_raw, weight_raw, slope, offset, reversal,
                 in_weight_raw, in_slope, in_offset, in_reversal) -> "LtcCellParams":
        return cls(
            wiring=wiring,
            tau_raw=parameter(tau_raw, "ltc.tau_raw"),
            weight_raw=parameter(weight_raw, "ltc.weight_raw"),
            slope=parameter(slope, "ltc.slope"),
            offset=parameter(offset, "ltc.offset"),
            reversal=parameter(reversal, "ltc.reversal"),
            in_weight_raw=parameter(in_weight_raw, "ltc.in_weight_raw"),
            in_slope=parameter(in_slope, "ltc.in_slope"),
            in_offset=parameter(in_offset, "ltc.in_offset"),
            in_reversal=parameter(in_reversal, "ltc.in_reversal"),
        )

    @classmethod
    def from_values(cls, wiring: Wiring, tau, weight, slope, offset, reversal,
                    in_weight, in_slope, in_offset, in_reversal) -> "LtcCellParams":
        """Build from constrained values (tau > 0, weight >= 0); scalars broadcast."""
        def full(value, count):
            return np.broadcast_to(np.asarray(value, dtype=np.float64), (count,)).copy()

        n, e, es = wiring.neuron_count, wiring.edge_count, wiring.sensory_edge_count
        return cls.from_raw(
            wiring,
            inverse_softplus(full(tau, n) - TAU_FLOOR),
            inverse_softplus(full(weight, e)), full(slope, e), full(offset, e), full(reversal, e),
            inverse_softplus(full(in_weight, es)), full(in_slope, es), full(in_offset, es),
            full(in_reversal, es),
        )

    def max_abs_reversal(self) -> float:
        values = np.concatenate([self.reversal.value, self.in_reversal.value])
        return float(np.abs(values).max()) if values.size else 0.0


@dataclass
class LtcState:
    """Hidden state x(t) and elapsed model time."""

    x: Node
    t: float = 0.0

    def detach(self) -> "LtcState":
        return LtcState(self.x.detach(), self.t)


def synapse_activation(pre_state, weight, slope, offset) -> Node:
    """Per-edge conductance f = w * sigmoid(gamma * (x_pre - mu)), in [0, w]."""
    gate = ops.sigmoid(ops.mul(slope, ops.sub(pre_state, offset)))
    return ops.mul(weight, gate)


def _drives(state_x: Node, inputs: Node, params: LtcCellParams):
    """Per-edge activations of recurrent and sensory synapses."""
    wiring = params.wiring
    f = synapse_activation(ops.gather(state_x, wiring.src), params.weight, params.slope, params.offset)
    f_in = synapse_activation(ops.gather(inputs, wiring.sensory_src), params.in_weight,
                              params.in_slope, params.in_offset)
    return f, f_in


def _check_step_inputs(state: LtcState, inputs: Node, params: LtcCellParams, dt: float) -> None:
    if not dt > 0:
        raise SolverError(f"dt must be positive, got {dt}")
    if inputs.shape != (params.wiring.sensory_count,):
        raise SolverError(
            f"input has shape {inputs.shape}, expected ({params.wiring.sensory_count},)")
    if not np.all(np.isfinite(state.x.value)):
        raise SolverError("non-finite LTC state")
    if not np.all(np.isfinite(inputs.value)):
        raise SolverError("non-finite LTC input")


def ltc_step(state: LtcState, inputs, params: LtcCellParams, dt: float) -> LtcState:
    """One fused semi-implicit step of duration dt."""
    inputs = as_node(inputs)
    _check_step_inputs(state, inputs, params, dt)
    wiring = params.wiring
    n = wiring.neuron_count

    f, f_in = _drives(state.x, inputs, params)
    numerator = ops.add(
        ops.scatter_sum(ops.mul(f, params.reversal), wiring.dst, n),
        ops.scatter_sum(ops.mul(f_in, params.in_reversal), wiring.sensory_dst, n),
    )
    conductance = ops.add(
        ops.scatter_sum(f, wiring.dst, n),
        ops.scatter_sum(f_in, wiring.sensory_dst, n),
    )
    leak = ops.div(1.0, params.tau)

    x_next = ops.div(
        ops.add(state.x, ops.scale(numerator, dt)),
        ops.add(1.0, ops.scale(ops.add(leak, conductance), dt)),
    )
    return LtcState(x_next, state.t + dt)


def ctrnn_step(state: LtcState, inputs, params: LtcCellParams, dt: float) -> LtcState:
    """Constant time-constant variant: synaptic drive is additive, decay is 1/tau only."""
    inputs = as_node(inputs)
    _check_step_inputs(state, inputs, params, dt)
    wiring = params.wiring
    n = wiring.neuron_count

    f, f_in = _drives(state.x, inputs, params)
    drive = ops.add(
        ops.scatter_sum(ops.mul(f, params.reversal), wiring.dst, n),
        ops.scatter_sum(ops.mul(f_in, params.in_reversal), wiring.sensory_dst, n),
    )
    x_next = ops.div(
        ops.add(state.x, ops.scale(drive, dt)),
        ops.add(1.0, ops.scale(ops.div(1.0, params.tau), dt)),
    )
    return LtcState(x_next, state.t + dt)


def total_conductance(state: LtcState, inputs, params: LtcCellParams) -> np.ndarray:
    """Summed synaptic activation entering each neuron."""
    with no_grad():
        f, f_in = _drives(state.x, as_node(inputs), params)
        n = params.wiring.neuron_count
        return (ops.scatter_sum(f, params.wiring.dst, n).value
                + ops.scatter_sum(f_in, params.wiring.sensory_dst, n).value)


def tau_sys(state: LtcState, inputs, params: LtcCellParams) -> np.ndarray:
    """Effective time constant tau / (1 + tau * total drive); diagnostic only."""
    inputs = as_node(inputs)
    _check_step_inputs(state, inputs, params, 1.0)
    with no_grad():
        tau = params.tau.value
    return tau / (1.0 + tau * total_conductance(state, inputs, params))


def ltc_derivative(x: np.ndarray, inputs: np.ndarray, params: LtcCellParams) -> np.ndarray:
    """Right-hand side of the LTC ODE at (x, I)."""
    wiring = params.wiring
    with no_grad():
        tau = params.tau.value
        weight, in_weight = params.weight.value, params.in_weight.value
    f = weight / (1.0 + np.exp(-params.slope.value * (x[wiring.src] - params.offset.value)))
    f_in = in_weight / (1.0 + np.exp(-params.in_slope.value * (inputs[wiring.sensory_src]
                                                              - params.in_offset.value)))
    dx = -x / tau
    np.add.at(dx, wiring.dst, f * (params.reversal.value - x[wiring.dst]))
    np.add.at(dx, wiring.sensory_dst, f_in * (params.in_reversal.value - x[wiring.sensory_dst]))
    return dx


def rk4_reference(x0: np.ndarray, inputs: np.ndarray, params: LtcCellParams,
                  dt: float, steps: int) -> np.ndarray:
    """Classic RK4 trajectory of the LTC ODE under a constant input, shape (steps + 1, N)."""
    x = np.array(x0, dtype=np.float64, copy=True)
    inputs = np.asarray(inputs, dtype=np.float64)
    trajectory = [x.copy()]
    for _ in range(steps):
        k1 = ltc_derivative(x, inputs, params)
        k2 = ltc_derivative(x + 0.5 * dt * k1, inputs, params)
        k3 = ltc_derivative(x + 0.5 * dt * k2, inputs, params)
        k4 = ltc_derivative(x + dt * k3, inputs, params)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        trajectory.append(x.copy())
    return np.stack(trajectory)


class LtcCell:
    """An LTC (or CT-RNN) cell bound to a wiring, stepping ode_unfolds fused sub-steps per sample."""

    def __init__(self, wiring: Wiring, params: Optional[LtcCellParams] = None,
                 dt: float = 1.0, ode_unfolds: int = 1, mode: str = "ltc",
                 rng: Optional[np.random.Generator] = None):
        if mode not in ("ltc", "ctrnn"):
            raise ValueError(f"Unknown cell mode: {mode}")
        if not dt > 0:
            raise SolverError(f"dt must be positive, got {dt}")
        if ode_unfolds < 1:
            raise ValueError("ode_unfolds must be at least 1")
        self.wiring = wiring
        self.params = params or LtcCellParams.initialize(wiring, rng or np.random.default_rng(0))
        self.dt = dt
        self.ode_unfolds = ode_unfolds
        self.mode = mode
        self._step_fn = ltc_step if mode == "ltc" else ctrnn_step

    def initial_state(self) -> LtcState:
        return LtcState(Node(np.zeros(self.wiring.neuron_count)), 0.0)

    def step(self, state: LtcState, inputs, dt: Optional[float] = None) -> LtcState:
        """Advance one sample; `dt` overrides the default for irregular sampling."""
        sub_dt = (dt if dt is not None else self.dt) / self.ode_unfolds
        for _ in range(self.ode_unfolds):
            state = self._step_fn(state, inputs, self.params, sub_dt)
        return state


class NcpModel(SequenceModel):
    """LTC neurons on an NCP wiring; the readout sees only the motor neurons."""

    def __init__(self, wiring: Wiring, seed: int = 0, dt: float = 1.0, ode_unfolds: int = 1,
                 mode: str = "ltc"):
        super().__init__(wiring.sensory_count)
        rng = np.random.default_rng(seed)
        self.seed = seed
        self.cell = LtcCell(wiring, dt=dt, ode_unfolds=ode_unfolds, mode=mode, rng=rng)
        self.readout = Readout.initialize(wiring.spec.motor_count, 1, rng)
        self.kind = "ncp" if mode == "ltc" else "ctrnn"

    @property
    def wiring(self) -> Wiring:
        return self.cell.wiring

    def named_parameters(self) -> Dict[str, Node]:
        return {**self.cell.params.named_parameters(), **self.readout.named_parameters()}

    def initial_state(self) -> LtcState:
        return self.cell.initial_state()

    def step(self, state: LtcState, inputs, dt: Optional[float] = None) -> LtcState:
        return self.cell.step(state, inputs, dt)

    def output(self, state: LtcState) -> Node:
        return self.readout(ops.gather(state.x, self.wiring.motor_indices))

    def detach_state(self, state: LtcState) -> LtcState:
        return state.detach()

    def flops_per_step(self) -> int:
        return ncp_flops_per_step(self.wiring, self.cell.ode_unfolds)

    def describe(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "n_features": self.n_features,
            "neurons": self.wiring.spec.inter_count,
            "seed": self.seed,
            "dt": self.cell.dt,
            "ode_unfolds": self.cell.ode_unfolds,
            "wiring": self.wiring.spec.to_dict(),
        }
