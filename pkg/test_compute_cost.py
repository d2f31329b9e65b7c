#!/usr/bin/env python3
"""
Compute cost tests: the FLOP ledger of a training run and the import of
external energy meter readings.
"""

import sys
from pathlib import Path

import pytest

# Add the project root to the path
sys.path.insert(0, str(Path(__file__).parent))

from analysis.compute_cost import FORWARD_BACKWARD_FACTOR, EnergyImportError, import_energy, ledger_for
from models.factory import build_model
from models.wiring import build_ncp_wiring, default_wiring_spec, flops_per_step, param_count
from training.trainer import TrainConfig


def test_lstm_ledger_from_dimensions():
    cfg = TrainConfig(model_kind="lstm", neuron_count=16, epochs=2)
    ledger = ledger_for(cfg, (6, 16), 100, wall_seconds=1.5, run_id="r1")
    assert ledger.params == 1489
    assert ledger.flops_per_step == 3024
    assert ledger.flops_total == 3 * 3024 * 100 * 2 == 1814400
    assert ledger.flops_forward == 3024 * 100 * 2
    assert ledger.wall_seconds == 1.5
    assert ledger.to_dict()["external_energy_joules"] is None


def test_model_and_wiring_give_the_same_ledger():
    cfg = TrainConfig(model_kind="ncp", neuron_count=16, epochs=3)
    model = build_model("ncp", 6, 16, seed=0)
    wiring = build_ncp_wiring(default_wiring_spec(16, 6, seed=0))
    from_model = ledger_for(cfg, model, 50)
    from_wiring = ledger_for(cfg, wiring, 50)
    assert from_model.to_dict() == from_wiring.to_dict()
    assert from_model.params == param_count(wiring)
    assert from_model.flops_total == FORWARD_BACKWARD_FACTOR * flops_per_step(wiring) * 50 * 3
    assert from_model.run_id == cfg.config_hash()


def test_ledger_counts_train_rows_of_a_dataset():
    from test_trainer import linear_dataset

    dataset = linear_dataset(rows=200, n_features=6)
    ledger = ledger_for(TrainConfig(model_kind="lstm", epochs=1), (6, 4), dataset)
    assert ledger.train_steps == 130


def write_meter(path, text):
    path.write_text(text)
    return path


def test_import_attaches_readings_and_sums_duplicates(tmp_path):
    meter = write_meter(tmp_path / "meter.csv", "run_id,joules\na,10\nb,2.5\na,5\nzzz,1\n")
    ledgers = {
        "a": ledger_for(TrainConfig(model_kind="lstm"), (2, 2), 10, run_id="a"),
        "c": ledger_for(TrainConfig(model_kind="lstm"), (2, 2), 10, run_id="c"),
    }
    readings = import_energy(meter, ledgers)
    assert readings == {"a": 15.0, "b": 2.5, "zzz": 1.0}
    assert ledgers["a"].external_energy_joules == 15.0
    assert ledgers["c"].external_energy_joules is None


@pytest.mark.parametrize("text", ["", "run_id,joules\n"])
def test_empty_meter_files(tmp_path, text):
    assert import_energy(write_meter(tmp_path / "m.csv", text)) == {}


@pytest.mark.parametrize("text", ["run_id,watts\na,1\n", "run_id,joules\na,lots\n", "run_id,joules\na,inf\n"])
def test_malformed_meter_files(tmp_path, text):
    with pytest.raises(EnergyImportError):
        import_energy(write_meter(tmp_path / "m.csv", text))


def test_missing_meter_file(tmp_path):
    with pytest.raises(EnergyImportError):
        import_energy(tmp_path / "absent.csv")
