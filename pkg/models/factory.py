# models/factory.py
"""Build sequence models by kind name."""

from typing import Any, Dict

from models.base import ModelError, SequenceModel
from models.lstm import LstmModel
from models.ltc import NcpModel
from models.wiring import WiringSpec, build_ncp_wiring, default_wiring_spec
from utils.logger import get_logger

logger = get_logger(__name__)

MODEL_KINDS = ("ncp", "ctrnn", "lstm")


def build_model(kind: str, n_features: int, neurons: int, seed: int = 0,
                sparsity: float = 0.9, ode_unfolds: int = 1, dt: float = 1.0) -> SequenceModel:
    """`neurons` is the intermediate-layer size for NCP kinds and the hidden size for LSTM."""
    if kind == "lstm":
        return LstmModel(n_features, neurons, seed=seed)
    if kind in ("ncp", "ctrnn"):
        spec = default_wiring_spec(neurons, n_features, sparsity=sparsity, seed=seed)
        wiring = build_ncp_wiring(spec)
        mode = "ltc" if kind == "ncp" else "ctrnn"
        return NcpModel(wiring, seed=seed, dt=dt, ode_unfolds=ode_unfolds, mode=mode)
    raise ModelError(f"Unknown model kind: {kind!r} (expected one of {', '.join(MODEL_KINDS)})")


def rebuild_model(description: Dict[str, Any]) -> SequenceModel:
    """Recreate the architecture recorded by SequenceModel.describe()."""
    kind = description["kind"]
    if kind == "lstm":
        return LstmModel(description["n_features"], description["neurons"], seed=description["seed"])
    wiring = build_ncp_wiring(WiringSpec(**description["wiring"]))
    return NcpModel(wiring, seed=description["seed"], dt=description["dt"],
                    ode_unfolds=description["ode_unfolds"],
                    mode="ltc" if kind == "ncp" else "ctrnn")
