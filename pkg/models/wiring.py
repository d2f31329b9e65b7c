# models/wiring.py
"""Four-layer sparse NCP wiring: sensory -> inter -> command (recurrent) -> motor.

Neuron indices run inter first, then command, then motor. Sensory units are
inputs, not neurons; their synapses are kept in a separate edge list.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from utils.logger import get_logger

logger = get_logger(__name__)

# Multiply-adds per sigmoidal synapse in one fused step: gate (sub, mul,
# sigmoid, mul), drive numerator (mul, add) and denominator (add), plus the
# gather/scatter adds.
SYNAPSE_FLOPS = 10
# Per-neuron cost of the fused update: leak add, two dt products, numerator
# add, denominator add and the division.
NEURON_FLOPS = 6
# LSTM per-hidden-unit elementwise cost: 4 bias adds, 3 sigmoids, 2 tanh,
# 3 for the cell update and 1 for the output product.
LSTM_ELEMENTWISE_FLOPS = 13

LAYER_NAMES = ("inter", "command", "motor")


class WiringError(ValueError):
    """Impossible wiring parameters or malformed wiring document."""
    pass


@dataclass
class WiringSpec:
    """Layer sizes and connection counts of an NCP wiring."""

    sensory_count: int
    inter_count: int
    command_count: int
    motor_count: int = 1
    sensory_fanout: int = 1
    inter_fanout: int = 1
    command_recurrence: int = 0
    motor_fanin: int = 1
    polarity_seed: int = 0

    @property
    def neuron_count(self) -> int:
        return self.inter_count + self.command_count + self.motor_count

    def validate(self) -> None:
        """Validate layer sizes and fan-outs."""
        for name in ("sensory_count", "inter_count", "command_count", "motor_count",
                     "sensory_fanout", "inter_fanout", "motor_fanin"):
            if int(getattr(self, name)) < 1:
                raise WiringError(f"{name} must be positive, got {getattr(self, name)}")
        if self.command_recurrence < 0:
            raise WiringError("command_recurrence cannot be negative")
        if self.sensory_fanout > self.inter_count:
            raise WiringError(
                f"sensory_fanout {self.sensory_fanout} exceeds inter layer size {self.inter_count}")
        if self.inter_fanout > self.command_count:
            raise WiringError(
                f"inter_fanout {self.inter_fanout} exceeds command layer size {self.command_count}")
        if self.motor_fanin > self.command_count:
            raise WiringError(
                f"motor_fanin {self.motor_fanin} exceeds command layer size {self.command_count}")
        if self.command_recurrence > self.command_count ** 2:
            raise WiringError(
                f"command_recurrence {self.command_recurrence} exceeds "
                f"{self.command_count ** 2} possible command pairs")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Wiring:
    """Sparse adjacency of an NCP. Immutable after construction."""

    spec: WiringSpec
    src: np.ndarray
    dst: np.ndarray
    polarity: np.ndarray
    sensory_src: np.ndarray
    sensory_dst: np.ndarray
    sensory_polarity: np.ndarray
    patched_edges: int = 0
    layer_of: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.layer_of:
            spec = self.spec
            layers = (("inter",) * spec.inter_count + ("command",) * spec.command_count
                      + ("motor",) * spec.motor_count)
            object.__setattr__(self, "layer_of", layers)
        for name in ("src", "dst", "polarity", "sensory_src", "sensory_dst", "sensory_polarity"):
            array = np.asarray(getattr(self, name), dtype=np.int64)
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def sensory_count(self) -> int:
        return self.spec.sensory_count

    @property
    def neuron_count(self) -> int:
        return self.spec.neuron_count

    @property
    def edge_count(self) -> int:
        return int(self.src.size)

    @property
    def sensory_edge_count(self) -> int:
        return int(self.sensory_src.size)

    @property
    def total_edges(self) -> int:
        return self.edge_count + self.sensory_edge_count

    def layer_indices(self, layer: str) -> np.ndarray:
        return np.array([i for i, name in enumerate(self.layer_of) if name == layer], dtype=np.int64)

    @property
    def motor_indices(self) -> np.ndarray:
        return self.layer_indices("motor")


def build_ncp_wiring(spec: WiringSpec) -> Wiring:
    """Generate the layered sparse topology, deterministic for spec.polarity_seed."""
    spec.validate()
    rng = np.random.default_rng(spec.polarity_seed)

    n_inter, n_command = spec.inter_count, spec.command_count
    inter = np.arange(n_inter)
    command = n_inter + np.arange(n_command)
    motor = n_inter + n_command + np.arange(spec.motor_count)

    sensory_edges: List[Tuple[int, int, int]] = []
    edges: List[Tuple[int, int, int]] = []

    def polarity() -> int:
        return int(rng.choice((-1, 1)))

    for s in range(spec.sensory_count):
        for t in rng.choice(n_inter, size=spec.sensory_fanout, replace=False):
            sensory_edges.append((s, int(inter[t]), polarity()))

    for i in inter:
        for t in rng.choice(n_command, size=spec.inter_fanout, replace=False):
            edges.append((int(i), int(command[t]), polarity()))

    if spec.command_recurrence:
        pairs = rng.choice(n_command * n_command, size=spec.command_recurrence, replace=False)
        for pair in pairs:
            edges.append((int(command[pair // n_command]), int(command[pair % n_command]), polarity()))

    for m in motor:
        for t in rng.choice(n_command, size=spec.motor_fanin, replace=False):
            edges.append((int(command[t]), int(m), polarity()))

    patched = _patch_unreached(spec, rng, sensory_edges, edges, inter, command, motor)
    if patched:
        logger.debug(f"Reachability patching added {patched} edge(s)")

    sensory_array = np.array(sensory_edges, dtype=np.int64).reshape(-1, 3)
    edge_array = np.array(edges, dtype=np.int64).reshape(-1, 3)
    return Wiring(
        spec=spec,
        src=edge_array[:, 0],
        dst=edge_array[:, 1],
        polarity=edge_array[:, 2],
        sensory_src=sensory_array[:, 0],
        sensory_dst=sensory_array[:, 1],
        sensory_polarity=sensory_array[:, 2],
        patched_edges=patched,
    )


def _reachable(n_neurons: int, sensory_edges, edges) -> np.ndarray:
    reached = np.zeros(n_neurons, dtype=bool)
    frontier = [dst for _, dst, _ in sensory_edges]
    outgoing: Dict[int, List[int]] = {}
    for src, dst, _ in edges:
        outgoing.setdefault(src, []).append(dst)
    while frontier:
        node = frontier.pop()
        if reached[node]:
            continue
        reached[node] = True
        frontier.extend(outgoing.get(node, ()))
    return reached


def _patch_unreached(spec: WiringSpec, rng, sensory_edges, edges, inter, command, motor) -> int:
    """Give every unreached neuron one incoming edge from its upstream layer."""
    patched = 0
    has_sensory_input = {dst for _, dst, _ in sensory_edges}
    for i in inter:
        if int(i) not in has_sensory_input:
            sensory_edges.append((int(rng.integers(spec.sensory_count)), int(i), int(rng.choice((-1, 1)))))
            patched += 1

    for layer, upstream in ((command, inter), (motor, command)):
        for neuron in layer:
            reached = _reachable(spec.neuron_count, sensory_edges, edges)
            if reached[neuron]:
                continue
            candidates = upstream[reached[upstream]]
            source = int(rng.choice(candidates))
            edges.append((source, int(neuron), int(rng.choice((-1, 1)))))
            patched += 1
    return patched


def validate_wiring(wiring: Wiring) -> List[str]:
    """Check the structural invariants of a wiring and return a list of problems."""
    errors = []
    layer = wiring.layer_of
    allowed = {("inter", "command"), ("command", "command"), ("command", "motor")}

    for src, dst in zip(wiring.src, wiring.dst):
        if (layer[src], layer[dst]) not in allowed:
            errors.append(f"edge {src}->{dst} connects {layer[src]} to {layer[dst]}")
    for s, dst in zip(wiring.sensory_src, wiring.sensory_dst):
        if not 0 <= s < wiring.sensory_count:
            errors.append(f"sensory edge from unknown unit {s}")
        if layer[dst] != "inter":
            errors.append(f"sensory edge {s}->{dst} targets {layer[dst]}")

    pairs = list(zip(wiring.src.tolist(), wiring.dst.tolist()))
    if len(set(pairs)) != len(pairs):
        errors.append("duplicate neuron edges")
    sensory_pairs = list(zip(wiring.sensory_src.tolist(), wiring.sensory_dst.tolist()))
    if len(set(sensory_pairs)) != len(sensory_pairs):
        errors.append("duplicate sensory edges")

    incoming = np.zeros(wiring.neuron_count, dtype=np.int64)
    np.add.at(incoming, wiring.dst, 1)
    np.add.at(incoming, wiring.sensory_dst, 1)
    for neuron in np.flatnonzero(incoming == 0):
        errors.append(f"neuron {neuron} has no incoming edge")

    sensory_edges = list(zip(wiring.sensory_src, wiring.sensory_dst, wiring.sensory_polarity))
    edges = list(zip(wiring.src, wiring.dst, wiring.polarity))
    reached = _reachable(wiring.neuron_count, sensory_edges, edges)
    for neuron in wiring.motor_indices:
        if not reached[neuron]:
            errors.append(f"motor neuron {neuron} is not reachable from any sensory unit")

    if not set(np.unique(np.concatenate([wiring.polarity, wiring.sensory_polarity]))) <= {-1, 1}:
        errors.append("polarity outside {-1, +1}")
    return errors


def default_wiring_spec(inter_count: int, sensory_count: int, sparsity: float = 0.9,
                        seed: int = 0, motor_count: int = 1) -> WiringSpec:
    """Experiment wiring for one intermediate-layer size.

    command = inter // 2. Edge budget (1 - sparsity) * (F*N + N^2) is spent on
    motor fan-in (command // 2 per motor), command recurrence (10% of command
    pairs), then sensory fan-out, with the remainder on inter fan-out.
    """
    if not 0.0 <= sparsity < 1.0:
        raise WiringError(f"sparsity must be in [0, 1), got {sparsity}")
    command_count = max(1, inter_count // 2)
    neurons = inter_count + command_count + motor_count
    budget = (1.0 - sparsity) * (sensory_count * neurons + neurons ** 2)

    motor_fanin = max(1, command_count // 2)
    recurrence = min(command_count ** 2, int(round(0.1 * command_count ** 2)))
    remaining = budget - motor_count * motor_fanin - recurrence
    sensory_fanout = int(np.clip(round(remaining / 2.0 / sensory_count), 1, inter_count))
    inter_fanout = int(np.clip(round((remaining - sensory_count * sensory_fanout) / inter_count),
                               1, command_count))

    return WiringSpec(
        sensory_count=sensory_count,
        inter_count=inter_count,
        command_count=command_count,
        motor_count=motor_count,
        sensory_fanout=sensory_fanout,
        inter_fanout=inter_fanout,
        command_recurrence=recurrence,
        motor_fanin=motor_fanin,
        polarity_seed=seed,
    )


def sparsity(wiring: Wiring) -> float:
    """1 - edges / (sensory->neuron pairs + neuron->neuron pairs, self-loops included)."""
    n = wiring.neuron_count
    reference = wiring.sensory_count * n + n * n
    return 1.0 - wiring.total_edges / reference


def param_count(wiring: Wiring, output_dim: int = 1) -> int:
    """Trainable scalars: (w, gamma, mu, A) per edge, tau per neuron, linear readout."""
    readout = wiring.spec.motor_count * output_dim + output_dim
    return 4 * wiring.total_edges + wiring.neuron_count + readout


def lstm_param_count(input_dim: int, hidden: int, output_dim: int = 1) -> int:
    """Four gates of (W, U, b) plus a linear readout."""
    return 4 * (hidden * (input_dim + hidden) + hidden) + hidden * output_dim + output_dim


def ncp_flops_per_step(wiring: Wiring, ode_unfolds: int = 1) -> int:
    """Forward FLOPs of one cell step (readout excluded)."""
    return ode_unfolds * (SYNAPSE_FLOPS * wiring.total_edges + NEURON_FLOPS * wiring.neuron_count)


def lstm_flops_per_step(input_dim: int, hidden: int) -> int:
    """Forward FLOPs of one LSTM step: 4 gate projections plus elementwise work."""
    return 8 * hidden * (input_dim + hidden) + LSTM_ELEMENTWISE_FLOPS * hidden


def flops_per_step(model_or_wiring: Union[Wiring, Tuple[int, int]], ode_unfolds: int = 1) -> int:
    """Dispatch: a Wiring, or (input_dim, hidden) LSTM dimensions."""
    if isinstance(model_or_wiring, Wiring):
        return ncp_flops_per_step(model_or_wiring, ode_unfolds)
    input_dim, hidden = model_or_wiring
    return lstm_flops_per_step(input_dim, hidden)


def wiring_to_json(wiring: Wiring) -> Dict[str, Any]:
    """Edge-list document for inspection and plotting."""
    return {
        "spec": wiring.spec.to_dict(),
        "neuron_count": wiring.neuron_count,
        "layers": {name: wiring.layer_indices(name).tolist() for name in LAYER_NAMES},
        "sensory_edges": [
            {"src": int(s), "dst": int(d), "polarity": int(p)}
            for s, d, p in zip(wiring.sensory_src, wiring.sensory_dst, wiring.sensory_polarity)
        ],
        "edges": [
            {"src": int(s), "dst": int(d), "polarity": int(p)}
            for s, d, p in zip(wiring.src, wiring.dst, wiring.polarity)
        ],
        "patched_edges": wiring.patched_edges,
        "sparsity": sparsity(wiring),
    }


def wiring_from_json(document: Dict[str, Any]) -> Wiring:
    """Rebuild a Wiring from wiring_to_json output."""
    try:
        spec = WiringSpec(**document["spec"])

        def columns(rows):
            array = np.array([[r["src"], r["dst"], r["polarity"]] for r in rows], dtype=np.int64)
            return array.reshape(-1, 3)

        sensory = columns(document["sensory_edges"])
        edges = columns(document["edges"])
    except (KeyError, TypeError) as e:
        raise WiringError(f"Malformed wiring document: {e}")

    return Wiring(
        spec=spec,
        src=edges[:, 0], dst=edges[:, 1], polarity=edges[:, 2],
        sensory_src=sensory[:, 0], sensory_dst=sensory[:, 1], sensory_polarity=sensory[:, 2],
        patched_edges=int(document.get("patched_edges", 0)),
    )


def save_wiring(wiring: Wiring, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(wiring_to_json(wiring), indent=2, sort_keys=True))
    return path
