import math

import numpy as np
import pytest

from marketlab.errors import CheckpointError, ConfigError, ShapeMismatchError
from marketlab.lstm import (
    LstmConfig,
    LstmParams,
    forward,
    init_params,
    load_checkpoint,
    lstm_cell_forward,
    mse_loss,
    param_count,
    save_checkpoint,
    sigmoid,
)

from .oracles import lstm_scalar_predict

REFERENCE_TOPOLOGY = LstmConfig(input_dim=6, hidden_dim=50, lookback=50, dense_dim=64, dropout_rate=0.2)
SMALL = LstmConfig(input_dim=2, hidden_dim=3, lookback=4, dense_dim=2, dropout_rate=0.0)


class TestParamCount:
    def test_reference_topology_total(self):
        assert param_count(REFERENCE_TOPOLOGY) == 14_729

    def test_reference_lstm_block_alone(self):
        cfg = REFERENCE_TOPOLOGY
        gate_params = 4 * ((cfg.input_dim + cfg.hidden_dim) * cfg.hidden_dim + cfg.hidden_dim)
        assert gate_params == 11_400

    def test_minimal_config_by_hand(self):
        # 4*((1+1)*1 + 1) + (1*1 + 1) + (1 + 1) = 16
        assert param_count(LstmConfig(1, 1, 1, 1, 0.0)) == 16

    def test_count_matches_allocation(self):
        for cfg in (REFERENCE_TOPOLOGY, SMALL, LstmConfig(3, 7, 5, 4, 0.1)):
            assert init_params(cfg, seed=0).size() == param_count(cfg)


class TestInitParams:
    def test_same_seed_bitwise_identical(self):
        a = init_params(SMALL, seed=42)
        b = init_params(SMALL, seed=42)
        for name, arr in a.blocks().items():
            assert np.array_equal(arr, b.blocks()[name])

    def test_different_seeds_differ(self):
        a = init_params(SMALL, seed=1)
        b = init_params(SMALL, seed=2)
        assert any(not np.array_equal(v, b.blocks()[k]) for k, v in a.blocks().items())

    def test_glorot_bounds_per_matrix(self):
        params = init_params(REFERENCE_TOPOLOGY, seed=7)
        f, h, d = 6, 50, 64
        bounds = {
            "w_f": math.sqrt(6.0 / ((h + f) + h)),
            "w_i": math.sqrt(6.0 / ((h + f) + h)),
            "w_c": math.sqrt(6.0 / ((h + f) + h)),
            "w_o": math.sqrt(6.0 / ((h + f) + h)),
            "w_d1": math.sqrt(6.0 / (h + d)),
            "w_d2": math.sqrt(6.0 / (d + 1)),
        }
        for name, bound in bounds.items():
            arr = params.blocks()[name]
            assert np.all(np.abs(arr) <= bound), name

    def test_biases_zero(self):
        params = init_params(SMALL, seed=3)
        for name in ("b_f", "b_i", "b_c", "b_o", "b_d1", "b_d2"):
            assert np.array_equal(params.blocks()[name], np.zeros_like(params.blocks()[name]))


class TestCellForward:
    def test_zero_params_zero_state(self):
        params = LstmParams.zeros(SMALL)
        h, c, gates = lstm_cell_forward(np.zeros(2), np.zeros(3), np.zeros(3), params)
        assert np.allclose(gates["f"], 0.5)
        assert np.allclose(gates["i"], 0.5)
        assert np.allclose(gates["o"], 0.5)
        assert np.array_equal(c, np.zeros(3))
        assert np.array_equal(h, np.zeros(3))

    def test_zero_params_unit_cell_state(self):
        params = LstmParams.zeros(SMALL)
        h, c, _ = lstm_cell_forward(np.zeros(2), np.zeros(3), np.ones(3), params)
        assert np.allclose(c, 0.5, atol=1e-15)
        assert np.allclose(h, 0.5 * math.tanh(0.5), atol=1e-15)

    def test_random_instance_matches_scalar_oracle(self):
        rng = np.random.default_rng(19)
        params = init_params(SMALL, seed=19)
        x = rng.normal(size=(1, 2))
        h, c, _ = lstm_cell_forward(x, np.zeros((1, 3)), np.zeros((1, 3)), params)
        # one-step scalar evaluation via the full-network oracle's first step
        # is exercised in test_forward; here check gate ranges instead
        assert np.all((h > -1) & (h < 1))
        assert np.isfinite(c).all()

    def test_gate_ranges(self):
        rng = np.random.default_rng(21)
        params = init_params(SMALL, seed=21)
        for _ in range(10):
            x = rng.normal(scale=3.0, size=2)
            h, c, gates = lstm_cell_forward(x, rng.normal(size=3), rng.normal(size=3), params)
            for g in ("f", "i", "o"):
                assert np.all((gates[g] > 0) & (gates[g] < 1))
            assert np.all((gates["g"] > -1) & (gates["g"] < 1))

    def test_dimension_mismatch(self):
        params = LstmParams.zeros(SMALL)
        with pytest.raises(ShapeMismatchError):
            lstm_cell_forward(np.zeros(5), np.zeros(3), np.zeros(3), params)


class TestForward:
    def test_dropout_zero_train_equals_eval(self):
        cfg = SMALL
        params = init_params(cfg, seed=5)
        batch = np.random.default_rng(5).normal(size=(3, cfg.lookback, cfg.input_dim))
        train_pred, _ = forward(batch, params, cfg, mode="train", rng=np.random.default_rng(0))
        eval_pred, _ = forward(batch, params, cfg, mode="eval")
        assert np.array_equal(train_pred, eval_pred)

    def test_eval_deterministic(self):
        cfg = LstmConfig(2, 4, 3, 3, dropout_rate=0.5)
        params = init_params(cfg, seed=6)
        batch = np.random.default_rng(6).normal(size=(2, cfg.lookback, cfg.input_dim))
        a, _ = forward(batch, params, cfg, mode="eval")
        b, _ = forward(batch, params, cfg, mode="eval")
        assert np.array_equal(a, b)

    def test_two_step_unroll_matches_scalar_oracle(self):
        cfg = LstmConfig(input_dim=2, hidden_dim=2, lookback=2, dense_dim=2, dropout_rate=0.0)
        params = init_params(cfg, seed=8)
        batch = np.random.default_rng(8).normal(size=(1, 2, 2))
        preds, _ = forward(batch, params, cfg, mode="eval")
        expected = lstm_scalar_predict(batch[0], params)
        assert preds[0] == pytest.approx(expected, abs=1e-12)

    def test_larger_unroll_matches_scalar_oracle(self):
        cfg = LstmConfig(input_dim=3, hidden_dim=4, lookback=5, dense_dim=3, dropout_rate=0.0)
        params = init_params(cfg, seed=9)
        batch = np.random.default_rng(9).normal(size=(4, 5, 3))
        preds, _ = forward(batch, params, cfg, mode="eval")
        for b in range(4):
            assert preds[b] == pytest.approx(lstm_scalar_predict(batch[b], params), abs=1e-12)

    def test_train_mode_respects_dropout_mask(self):
        cfg = LstmConfig(input_dim=2, hidden_dim=6, lookback=3, dense_dim=2, dropout_rate=0.5)
        params = init_params(cfg, seed=10)
        batch = np.random.default_rng(10).normal(size=(1, 3, 2))
        preds, cache = forward(batch, params, cfg, mode="train", rng=np.random.default_rng(123))
        expected = lstm_scalar_predict(batch[0], params, dropout_mask=cache.dropout_mask[0])
        assert preds[0] == pytest.approx(expected, abs=1e-12)

    def test_train_mode_with_dropout_needs_rng(self):
        cfg = LstmConfig(2, 3, 2, 2, dropout_rate=0.3)
        params = init_params(cfg, seed=1)
        batch = np.zeros((1, 2, 2)) + 0.1
        with pytest.raises(ConfigError):
            forward(batch, params, cfg, mode="train")

    def test_shape_mismatch(self):
        params = init_params(SMALL, seed=2)
        with pytest.raises(ShapeMismatchError):
            forward(np.zeros((2, 3, 2)), params, SMALL)  # lookback 4 expected

    def test_cache_length_equals_lookback(self):
        params = init_params(SMALL, seed=2)
        batch = np.random.default_rng(2).normal(size=(2, SMALL.lookback, SMALL.input_dim))
        _, cache = forward(batch, params, SMALL)
        assert len(cache) == SMALL.lookback


class TestMseLoss:
    def test_equal_is_zero(self):
        assert mse_loss([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_unit_residuals(self):
        assert mse_loss([0.0, 0.0], [1.0, 1.0]) == 1.0

    def test_random_matches_definitional_oracle(self):
        rng = np.random.default_rng(33)
        p = rng.normal(size=17)
        t = rng.normal(size=17)
        expected = sum((float(a) - float(b)) ** 2 for a, b in zip(t, p)) / 17
        assert mse_loss(p, t) == pytest.approx(expected, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ShapeMismatchError):
            mse_loss([], [])


class TestSigmoid:
    def test_extremes_do_not_overflow(self):
        values = sigmoid(np.asarray([-1000.0, -30.0, 0.0, 30.0, 1000.0]))
        assert values[0] == 0.0
        assert values[2] == 0.5
        assert values[4] == 1.0
        assert np.all((values >= 0) & (values <= 1))


class TestCheckpoint:
    def test_round_trip_bitwise(self, tmp_path):
        cfg = LstmConfig(3, 5, 4, 3, dropout_rate=0.25)
        params = init_params(cfg, seed=77)
        path = save_checkpoint(tmp_path / "model.bin", params, cfg, seed=77)
        loaded, loaded_cfg, seed = load_checkpoint(path)
        assert loaded_cfg == cfg
        assert seed == 77
        for name, arr in params.blocks().items():
            assert np.array_equal(arr, loaded.blocks()[name])

    def test_save_is_deterministic(self, tmp_path):
        cfg = LstmConfig(2, 3, 2, 2, 0.0)
        params = init_params(cfg, seed=1)
        p1 = save_checkpoint(tmp_path / "a.bin", params, cfg, seed=1)
        p2 = save_checkpoint(tmp_path / "b.bin", params, cfg, seed=1)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_file_rejected(self, tmp_path):
        bad = tmp_path / "bad.bin"
        bad.write_text("{}")
        with pytest.raises(CheckpointError):
            load_checkpoint(bad)
