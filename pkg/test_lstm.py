#!/usr/bin/env python3
"""
LSTM baseline tests: gate layout, bounded hidden state, shapes and cost.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the path
sys.path.insert(0, str(Path(__file__).parent))

from autodiff.node import Node, no_grad
from models.lstm import FORGET_BIAS, LstmError, LstmModel, LstmParams, LstmState, lstm_step
from models.wiring import lstm_flops_per_step, lstm_param_count


def test_forget_gate_bias_initialization():
    params = LstmParams.initialize(3, 4, np.random.default_rng(0))
    b = params.b.value
    np.testing.assert_array_equal(b[4:8], FORGET_BIAS)
    np.testing.assert_array_equal(np.delete(b, np.arange(4, 8)), 0.0)


def test_hidden_state_is_bounded_for_extreme_inputs():
    model = LstmModel(n_features=2, hidden_dim=5, seed=1)
    rng = np.random.default_rng(1)
    state = model.initial_state()
    with no_grad():
        for _ in range(200):
            state = model.step(state, Node(rng.uniform(-1e6, 1e6, size=2)))
            assert np.all(np.abs(state.h.value) <= 1.0)
            assert np.all(np.isfinite(state.c.value))


def test_step_matches_hand_computed_update():
    W = np.zeros((4, 1))
    U = np.zeros((4, 1))
    b = np.array([0.0, 0.0, 0.0, 0.0])
    W[2, 0] = 1.0  # candidate g = tanh(x)
    params = LstmParams.from_arrays(W, U, b)
    state = LstmState(Node(np.zeros(1)), Node(np.array([0.4])))
    with no_grad():
        nxt = lstm_step(state, Node(np.array([0.5])), params)

    gate = 0.5  # sigmoid(0)
    c = gate * 0.4 + gate * np.tanh(0.5)
    np.testing.assert_allclose(nxt.c.value, [c])
    np.testing.assert_allclose(nxt.h.value, [gate * np.tanh(c)])


def test_inconsistent_shapes_are_rejected():
    with pytest.raises(LstmError):
        LstmParams.from_arrays(np.zeros((8, 3)), np.zeros((8, 3)), np.zeros(8))
    params = LstmParams.initialize(3, 2, np.random.default_rng(0))
    state = LstmState(Node(np.zeros(2)), Node(np.zeros(2)))
    with pytest.raises(LstmError):
        lstm_step(state, Node(np.zeros(4)), params)
    with pytest.raises(LstmError):
        lstm_step(state, Node(np.array([np.inf, 0.0, 0.0])), params)


def test_parameter_and_flop_accounting():
    model = LstmModel(n_features=6, hidden_dim=16, seed=0)
    assert model.param_count() == lstm_param_count(6, 16) == 1489
    assert model.flops_per_step() == lstm_flops_per_step(6, 16)
    assert model.describe() == {"kind": "lstm", "n_features": 6, "neurons": 16, "seed": 0}


def test_state_dict_round_trip_reproduces_outputs():
    a = LstmModel(n_features=3, hidden_dim=4, seed=2)
    b = LstmModel(n_features=3, hidden_dim=4, seed=9)
    b.load_state_dict(a.state_dict())
    x = np.random.default_rng(0).normal(size=(10, 3))
    sa, sb = a.initial_state(), b.initial_state()
    with no_grad():
        for row in x:
            sa, sb = a.step(sa, Node(row)), b.step(sb, Node(row))
            np.testing.assert_array_equal(a.output(sa).value, b.output(sb).value)


def test_open_forget_and_closed_input_gates_hold_the_cell_state():
    input_dim, hidden = 3, 4
    rng = np.random.default_rng(5)
    base = LstmParams.initialize(input_dim, hidden, rng)
    b = base.b.value.copy()
    b[:hidden] = -1e3
    b[hidden:2 * hidden] = 1e3
    params = LstmParams.from_arrays(base.W.value, base.U.value, b)

    c0 = rng.uniform(-2.0, 2.0, size=hidden)
    state = LstmState(Node(rng.uniform(-0.5, 0.5, size=hidden)), Node(c0))
    with no_grad():
        for _ in range(50):
            state = lstm_step(state, Node(rng.normal(size=input_dim)), params)
            np.testing.assert_array_equal(state.c.value, c0)
