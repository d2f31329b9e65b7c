#!/usr/bin/env python3
"""
Container and experiment configuration tests: deterministic archives, the
default run grid, run keys and configuration errors.
"""

import json
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the path
sys.path.insert(0, str(Path(__file__).parent))

from config.experiment_config import (
    ConfigError,
    ExperimentConfig,
    RunSpec,
    load_experiment_config,
    parse_experiment_config,
)
from utils.containers import ContainerError, read_container, write_container


def test_container_round_trip_and_identical_bytes(tmp_path):
    arrays = {"b": np.arange(6.0).reshape(2, 3), "a": np.array([1, 2, 3], dtype=np.int64)}
    meta = {"name": "x", "value": np.float64(1.5)}
    first = write_container(tmp_path / "one" / "c.zip", arrays, meta)
    second = write_container(tmp_path / "two.zip", dict(reversed(list(arrays.items()))), meta)
    assert first.read_bytes() == second.read_bytes()

    loaded, loaded_meta = read_container(first)
    np.testing.assert_array_equal(loaded["b"], arrays["b"])
    assert loaded["a"].dtype == np.int64
    assert loaded_meta == {"name": "x", "value": 1.5}


def test_container_errors(tmp_path):
    with pytest.raises(ContainerError):
        read_container(tmp_path / "missing.zip")
    with pytest.raises(ContainerError):
        write_container(tmp_path / "c.zip", {"a/b": np.zeros(1)}, {})
    with pytest.raises(ContainerError):
        write_container(tmp_path / "c.zip", {"a": np.array([{}, None], dtype=object)}, {})
    not_zip = tmp_path / "plain.zip"
    not_zip.write_text("hello")
    with pytest.raises(ContainerError):
        read_container(not_zip)


def test_default_grid_has_one_hundred_seventy_runs():
    runs = ExperimentConfig().run_grid()
    assert len(runs) == 170
    assert sum(r.model_kind == "lstm" for r in runs) == 85
    over = [r for r in runs if r.epochs == 800]
    assert {r.neurons for r in over} == {16}
    assert len(over) == 2 * 5


def test_lstm_runs_use_a_single_sparsity():
    config = parse_experiment_config({"models": {"neurons": [4], "epochs": [1], "seeds": [0],
                                                 "sparsities": [0.5, 0.9], "overtraining": False}})
    kinds = [r.model_kind for r in config.run_grid()]
    assert kinds.count("ncp") == 2
    assert kinds.count("lstm") == 1


def test_run_keys_are_stable_and_discriminating():
    config = ExperimentConfig()
    run = RunSpec(model_kind="ncp", neurons=16, epochs=50, seed=0)
    key = config.run_key(run)
    assert key == ExperimentConfig().run_key(RunSpec(model_kind="ncp", neurons=16, epochs=50, seed=0))
    assert len(key) == 64
    assert key != config.run_key(run.model_copy(update={"seed": 1}))
    assert key != config.run_key(run, {"kind": "noise", "epsilon": 0.1})
    assert key != parse_experiment_config({"dataset": {"seed": 9}}).run_key(run)


def test_dataset_key_ignores_the_model_grid():
    a = parse_experiment_config({"models": {"neurons": [8]}})
    b = parse_experiment_config({"models": {"neurons": [32]}})
    assert a.dataset_key() == b.dataset_key()
    assert a.dataset_key() != parse_experiment_config({"dataset": {"rows": 500}}).dataset_key()


def test_train_config_for_a_run():
    config = parse_experiment_config({"models": {"learning_rate": 0.01, "truncation_len": 8}})
    cfg = config.train_config(RunSpec(model_kind="lstm", neurons=32, epochs=100, seed=2))
    assert (cfg.model_kind, cfg.neuron_count, cfg.epochs, cfg.seed) == ("lstm", 32, 100, 2)
    assert cfg.learning_rate == 0.01 and cfg.truncation_len == 8
    cfg.validate()


@pytest.mark.parametrize("document,location", [
    ({"bogus": 1}, "bogus"),
    ({"models": {"kinds": ["gru"]}}, "models.kinds"),
    ({"models": {"neurons": [0]}}, "models.neurons"),
    ({"dataset": {"rows": 10}}, "dataset.rows"),
    ({"dataset": {"source": "csv"}}, "dataset"),
    ({"pipeline": {"train_fraction": 0.8, "test_fraction": 0.3}}, "pipeline"),
    ({"perturbations": {"noise": [-0.1]}}, "perturbations.noise"),
])
def test_invalid_documents_name_the_field(document, location):
    with pytest.raises(ConfigError) as info:
        parse_experiment_config(document)
    assert any(error.startswith(location) for error in info.value.errors)


def test_load_from_file(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"name": "small", "models": {"kinds": ["lstm"], "neurons": [4]}}))
    config = load_experiment_config(path)
    assert config.name == "small"
    assert config.models.kinds == ["lstm"]


@pytest.mark.parametrize("text", ["{not json", "[1, 2]"])
def test_unreadable_config_files(tmp_path, text):
    path = tmp_path / "experiment.json"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_experiment_config(path)
    with pytest.raises(ConfigError):
        load_experiment_config(tmp_path / "absent.json")
