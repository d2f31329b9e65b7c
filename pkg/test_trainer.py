#!/usr/bin/env python3
"""
Trainer tests: window layout, configuration checks, learning on a small
linear task, numerical aborts and checkpoint round trips.
"""

import pickle
import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the path
sys.path.insert(0, str(Path(__file__).parent))

from analysis.metrics import r2_score
from data.dataset import Dataset
from data.synthetic import synth_generate
from models.base import ModelError
from models.factory import build_model
from training.checkpoint import config_from_meta, load_checkpoint, save_checkpoint
from training.optimizer import AdamState, adam_update, clip_grad_norm, global_norm
from training.trainer import (
    NumericalAbort,
    TrainConfig,
    TrainingError,
    evaluate_r2,
    predict,
    predict_test_rows,
    train,
    window_bounds,
)


def linear_dataset(rows=240, n_features=2, seed=0):
    """Target is a fixed linear map of the current features plus a little noise."""
    rng = np.random.default_rng(seed)
    features = rng.normal(size=(rows, n_features))
    target = features @ np.linspace(0.8, -0.5, n_features) + 0.05 * rng.normal(size=rows)
    target = (target - target[: int(0.65 * rows)].mean()) / target[: int(0.65 * rows)].std()
    return Dataset(
        features=features,
        target=target,
        timestamps=(np.arange(rows) * 15).astype("datetime64[m]"),
        feature_names=[f"f{j}" for j in range(n_features)],
        train_idx=np.arange(int(0.65 * rows)),
        test_idx=np.arange(rows - int(0.30 * rows), rows),
    )


def test_window_bounds_cover_the_sequence_in_order():
    assert window_bounds(10, 4) == [(0, 4), (4, 8), (8, 10)]
    assert window_bounds(4, 4) == [(0, 4)]


@pytest.mark.parametrize("field,value", [
    ("epochs", 0),
    ("learning_rate", 0.0),
    ("model_kind", "gru"),
    ("truncation_len", 0),
    ("optimizer", "rmsprop"),
    ("sparsity", 1.0),
    ("dt", 0.0),
])
def test_invalid_configuration(field, value):
    cfg = TrainConfig(**{field: value})
    with pytest.raises(TrainingError):
        cfg.validate()


def test_clip_norm_defaults_per_model():
    assert TrainConfig(model_kind="lstm").effective_clip_norm() == 1.0
    assert TrainConfig(model_kind="ncp").effective_clip_norm() is None
    assert TrainConfig(model_kind="lstm", clip_norm=0.0).effective_clip_norm() is None
    assert TrainConfig(model_kind="ncp", clip_norm=2.5).effective_clip_norm() == 2.5


def test_config_hash_is_stable_and_sensitive():
    assert TrainConfig().config_hash() == TrainConfig().config_hash()
    assert TrainConfig(seed=1).config_hash() != TrainConfig(seed=2).config_hash()


def test_adam_first_step_moves_by_learning_rate():
    params = {"w": np.array([1.0, -1.0])}
    updated = adam_update(params, {"w": np.array([0.3, -7.0])}, AdamState(), lr=0.01)
    np.testing.assert_allclose(updated["w"], [0.99, -0.99], atol=1e-6)


def test_clipping_rescales_the_global_norm():
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    clipped, norm = clip_grad_norm(grads, 1.0)
    assert norm == pytest.approx(5.0)
    assert global_norm(clipped) == pytest.approx(1.0)
    unchanged, _ = clip_grad_norm(grads, None)
    assert unchanged is grads


def test_feature_count_mismatch_is_rejected():
    dataset = linear_dataset(n_features=2)
    model = build_model("lstm", n_features=3, neurons=2)
    with pytest.raises(TrainingError):
        train(model, dataset, TrainConfig(model_kind="lstm", neuron_count=2, epochs=1))


def test_numerical_abort_survives_pickling():
    error = NumericalAbort(3, 7, float("nan"), reason="non-finite gradient")
    restored = pickle.loads(pickle.dumps(error))
    assert isinstance(restored, NumericalAbort)
    assert (restored.epoch, restored.window, restored.reason) == (3, 7, "non-finite gradient")
    assert str(restored) == str(error)


def test_training_is_deterministic_for_a_seed():
    dataset = linear_dataset(rows=120)
    cfg = TrainConfig(model_kind="ncp", neuron_count=4, epochs=2, seed=3, truncation_len=16)
    a = build_model("ncp", 2, 4, seed=3)
    b = build_model("ncp", 2, 4, seed=3)
    trace_a, trace_b = train(a, dataset, cfg), train(b, dataset, cfg)
    assert trace_a.train_loss == trace_b.train_loss
    for name, value in a.state_dict().items():
        np.testing.assert_array_equal(value, b.state_dict()[name])


def test_trace_records_every_epoch():
    dataset = linear_dataset(rows=120)
    cfg = TrainConfig(model_kind="ncp", neuron_count=4, epochs=3, truncation_len=32, track_test_r2=True)
    seen = []
    trace = train(build_model("ncp", 2, 4), dataset, cfg, on_epoch=lambda e, loss: seen.append(e))
    assert seen == [1, 2, 3]
    assert len(trace.train_loss) == len(trace.test_r2) == len(trace.epoch_seconds) == 3
    assert all(np.isfinite(trace.train_loss))
    assert all(r2 is not None for r2 in trace.test_r2)
    assert trace.wall_seconds >= 0.0
    assert set(trace.checkpoint) == set(build_model("ncp", 2, 4).named_parameters())


@pytest.mark.slow
def test_lstm_learns_a_linear_map():
    dataset = linear_dataset(rows=240)
    cfg = TrainConfig(model_kind="lstm", neuron_count=4, epochs=30, learning_rate=0.05,
                      truncation_len=16)
    model = build_model("lstm", 2, 4, seed=0)
    trace = train(model, dataset, cfg)
    assert trace.train_loss[-1] < trace.train_loss[0]
    assert r2_score(dataset.test_target, predict_test_rows(model, dataset)) > 0.5


@pytest.mark.slow
def test_ncp_training_reduces_loss():
    dataset = linear_dataset(rows=240)
    cfg = TrainConfig(model_kind="ncp", neuron_count=8, epochs=15, learning_rate=0.05,
                      truncation_len=16)
    model = build_model("ncp", 2, 8, seed=0)
    trace = train(model, dataset, cfg)
    assert trace.train_loss[-1] < trace.train_loss[0]


def test_predict_does_not_record_a_graph():
    model = build_model("ncp", 2, 4)
    out = predict(model, np.zeros((5, 2)))
    assert out.shape == (5,)
    for p in model.parameters():
        assert not np.any(p.grad)


@pytest.mark.parametrize("kind", ["ncp", "ctrnn", "lstm"])
def test_checkpoint_round_trip(tmp_path, kind):
    dataset = linear_dataset(rows=100)
    cfg = TrainConfig(model_kind=kind, neuron_count=4, epochs=1, seed=4)
    model = build_model(kind, 2, 4, seed=4)
    train(model, dataset, cfg)
    path = save_checkpoint(tmp_path / "model.ckpt", model, cfg)

    restored, meta = load_checkpoint(path)
    assert restored.kind == model.kind
    assert meta["config_hash"] == cfg.config_hash()
    assert config_from_meta(meta) == cfg
    np.testing.assert_array_equal(predict(restored, dataset.features), predict(model, dataset.features))


def test_checkpoint_bytes_are_deterministic(tmp_path):
    model = build_model("ncp", 2, 4, seed=1)
    a = save_checkpoint(tmp_path / "a.ckpt", model, TrainConfig(neuron_count=4))
    b = save_checkpoint(tmp_path / "b.ckpt", model, TrainConfig(neuron_count=4))
    assert a.read_bytes() == b.read_bytes()


def test_loading_mismatched_state_fails():
    model = build_model("lstm", 2, 4)
    state = model.state_dict()
    state.pop("lstm.b")
    with pytest.raises(ModelError):
        model.load_state_dict(state)


def constant_target_dataset(rows=160, n_features=2, seed=0):
    base = linear_dataset(rows=rows, n_features=n_features, seed=seed)
    return Dataset(base.features, np.zeros(rows), base.timestamps, base.feature_names,
                   base.train_idx, base.test_idx)


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["ncp", "lstm"])
def test_constant_target_loss_never_rises_after_warmup(kind):
    dataset = constant_target_dataset()
    model = build_model(kind, 2, 4, seed=2)
    # start from a known unit offset so every update walks the output toward zero
    state = model.state_dict()
    state["readout.weight"] = np.zeros_like(state["readout.weight"])
    state["readout.bias"] = np.ones_like(state["readout.bias"])
    model.load_state_dict(state)

    cfg = TrainConfig(model_kind=kind, neuron_count=4, epochs=15, seed=2,
                      truncation_len=dataset.train_idx.size)
    losses = train(model, dataset, cfg).train_loss
    assert losses[0] == pytest.approx(1.0)
    for earlier, later in zip(losses[4:], losses[5:]):
        assert later <= earlier + 1e-9


def two_feature_linear_dataset(rows=800, seed=7):
    """y = 0.5 x1 + 0.2 x2, scaled to unit variance on the train rows."""
    rng = np.random.default_rng(seed)
    features = rng.normal(size=(rows, 2))
    target = 0.5 * features[:, 0] + 0.2 * features[:, 1]
    n_train = int(0.65 * rows)
    target = (target - target[:n_train].mean()) / target[:n_train].std()
    return Dataset(features, target, (np.arange(rows) * 15).astype("datetime64[m]"), ["x1", "x2"],
                   np.arange(n_train), np.arange(rows - int(0.30 * rows), rows))


@pytest.mark.slow
def test_sixteen_unit_model_fits_a_two_feature_linear_map():
    dataset = two_feature_linear_dataset()
    cfg = TrainConfig(model_kind="lstm", neuron_count=16, epochs=100, seed=7, learning_rate=0.01,
                      truncation_len=16)
    trace = train(build_model("lstm", 2, 16, seed=7), dataset, cfg)
    assert len(trace.train_loss) == 100
    assert trace.train_loss[-1] < 0.05


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["ncp", "lstm"])
def test_default_synthetic_dataset_reaches_most_of_the_ceiling(kind):
    dataset = synth_generate()
    ceiling = dataset.meta["ceiling_r2"]
    model = build_model(kind, dataset.n_features, 16, seed=0)
    train(model, dataset, TrainConfig(model_kind=kind, neuron_count=16, epochs=100, seed=0))
    assert evaluate_r2(model, dataset) >= 0.7 * ceiling
