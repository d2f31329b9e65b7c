# Sequence models: NCP wiring, LTC/CT-RNN cells and the LSTM baseline
from models.base import ModelError, SequenceModel
from models.factory import MODEL_KINDS, build_model, rebuild_model
from models.lstm import LstmError, LstmModel, LstmParams, LstmState, lstm_step
from models.ltc import LtcCell, LtcCellParams, LtcState, NcpModel, SolverError, ltc_step, tau_sys
from models.wiring import Wiring, WiringError, WiringSpec, build_ncp_wiring, sparsity

__all__ = [
    "MODEL_KINDS",
    "LstmError",
    "LstmModel",
    "LstmParams",
    "LstmState",
    "LtcCell",
    "LtcCellParams",
    "LtcState",
    "ModelError",
    "NcpModel",
    "SequenceModel",
    "SolverError",
    "Wiring",
    "WiringError",
    "WiringSpec",
    "build_model",
    "build_ncp_wiring",
    "lstm_step",
    "ltc_step",
    "rebuild_model",
    "sparsity",
    "tau_sys",
]
