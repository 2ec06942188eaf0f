import datetime as dt
import math

import numpy as np
import pytest

from marketlab.errors import ConfigError, MetricsError, ShapeMismatchError, TrainingDivergedError
from marketlab.frame import SupervisedTensors, make_supervised_windows
from marketlab.lstm import LstmConfig, init_params, load_checkpoint, save_checkpoint
from marketlab.training import MetricsReport, TrainConfig, TrainHistory, evaluate, predict, train

from .conftest import make_frame

D0 = dt.date(2020, 1, 1)
TINY = LstmConfig(input_dim=1, hidden_dim=8, lookback=8, dense_dim=8, dropout_rate=0.0)


def sine_tensors(n: int, config: LstmConfig, periods: float = 6.0, seed: int = 0):
    """Noiseless sine scaled into [0.1, 0.9], windowed for the given config."""
    t = np.arange(n)
    values = 0.5 + 0.4 * np.sin(2 * np.pi * periods * t / n)
    frame = make_frame(D0, {"x": list(values)})
    return make_supervised_windows(frame, ["x"], "x", config.lookback)


class TestTrain:
    def test_zero_epochs_returns_params_unchanged(self):
        tensors = sine_tensors(60, TINY)
        params = init_params(TINY, seed=0)
        before = {k: v.copy() for k, v in params.blocks().items()}
        out, history = train(params, TINY, tensors, TrainConfig(epochs=0, batch_size=8, seed=0))
        assert history.train_loss == [] and history.val_loss == []
        for name, arr in out.blocks().items():
            assert np.array_equal(arr, before[name])

    def test_constant_target_learnable_by_bias(self):
        n = 80
        rng = np.random.default_rng(3)
        inputs = rng.uniform(0, 1, size=(n, TINY.lookback, 1))
        targets = np.full(n, 0.35)
        dates = tuple(D0 + dt.timedelta(days=i) for i in range(n))
        tensors = SupervisedTensors(inputs, targets, dates)
        params = init_params(TINY, seed=3)
        # Adam moves each weight at most lr per step, so closing the initial
        # offset within 50 epochs needs a step size matched to the test
        params, history = train(
            params, TINY, tensors, TrainConfig(learning_rate=0.02, epochs=50, batch_size=16, seed=3)
        )
        assert history.train_loss[-1] < 1e-4

    def test_sine_validation_loss_decreases(self):
        tensors = sine_tensors(300, TINY)
        params = init_params(TINY, seed=1)
        params, history = train(params, TINY, tensors, TrainConfig(seed=1))
        assert len(history.train_loss) == 50
        assert history.val_loss[-1] < history.val_loss[0]
        # trend over epoch windows rather than strict monotonicity
        assert np.mean(history.val_loss[-10:]) < np.mean(history.val_loss[:10])

    def test_validation_targets_never_used_in_gradients(self):
        tensors = sine_tensors(200, TINY)
        n = len(tensors)
        val_n = int(n * 0.10)
        poisoned = tensors.targets.copy()
        poisoned[n - val_n :] = np.nan
        poisoned_tensors = SupervisedTensors(tensors.inputs, poisoned, tensors.sample_dates)
        params = init_params(TINY, seed=2)
        params, history = train(
            params, TINY, poisoned_tensors, TrainConfig(epochs=3, seed=2)
        )
        assert all(math.isfinite(v) for v in history.train_loss)
        assert all(math.isnan(v) for v in history.val_loss)

    def test_deterministic_across_runs(self):
        tensors = sine_tensors(150, TINY)
        cfg = TrainConfig(epochs=4, seed=11, shuffle=True)
        a, hist_a = train(init_params(TINY, seed=11), TINY, tensors, cfg)
        b, hist_b = train(init_params(TINY, seed=11), TINY, tensors, cfg)
        assert hist_a.train_loss == hist_b.train_loss
        assert hist_a.val_loss == hist_b.val_loss
        for name, arr in a.blocks().items():
            assert np.array_equal(arr, b.blocks()[name])

    def test_nan_loss_aborts_with_coordinates(self):
        tensors = sine_tensors(100, TINY)
        bad = tensors.targets.copy()
        bad[0] = np.nan  # first training batch diverges immediately
        with pytest.raises(TrainingDivergedError, match="epoch 1, batch 1"):
            train(
                init_params(TINY, seed=0),
                TINY,
                SupervisedTensors(tensors.inputs, bad, tensors.sample_dates),
                TrainConfig(epochs=1, seed=0),
            )

    def test_batch_size_precondition(self):
        tensors = sine_tensors(30, TINY)
        with pytest.raises(ConfigError):
            train(init_params(TINY, seed=0), TINY, tensors, TrainConfig(batch_size=len(tensors)))

    def test_history_csv_round_trip(self):
        history = TrainHistory([0.5, 0.25], [0.6, float("nan")])
        again = TrainHistory.from_csv(history.to_csv())
        assert again.train_loss == history.train_loss
        assert again.val_loss[0] == 0.6 and math.isnan(again.val_loss[1])


class TestPredict:
    def test_repeatable(self):
        params = init_params(TINY, seed=4)
        batch = np.random.default_rng(4).uniform(size=(5, TINY.lookback, 1))
        assert np.array_equal(predict(params, TINY, batch), predict(params, TINY, batch))

    def test_batch_independence(self):
        params = init_params(TINY, seed=5)
        batch = np.random.default_rng(5).uniform(size=(7, TINY.lookback, 1))
        single = predict(params, TINY, batch[2:3])
        full = predict(params, TINY, batch)
        assert abs(single[0] - full[2]) < 1e-12

    def test_checkpoint_round_trip_predictions(self, tmp_path):
        params = init_params(TINY, seed=6)
        batch = np.random.default_rng(6).uniform(size=(4, TINY.lookback, 1))
        before = predict(params, TINY, batch)
        save_checkpoint(tmp_path / "ck.bin", params, TINY, seed=6)
        loaded, cfg, _ = load_checkpoint(tmp_path / "ck.bin")
        after = predict(loaded, cfg, batch)
        assert np.array_equal(before, after)


class TestEvaluate:
    def test_perfect_predictions(self):
        report = evaluate([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert report == MetricsReport(0.0, 0.0, 0.0, 0.0)

    def test_worked_example(self):
        # hand arithmetic: errors 10 and 20 -> MSE (100+400)/2 = 250,
        # RMSE sqrt(250), MAE 15, MAPE 100*(10/100 + 20/200)/2 = 10
        report = evaluate([100.0, 200.0], [110.0, 180.0])
        assert report.mse == pytest.approx(250.0, abs=1e-12)
        assert report.rmse == pytest.approx(math.sqrt(250.0), abs=1e-12)
        assert report.rmse == pytest.approx(15.811, abs=1e-3)
        assert report.mae == pytest.approx(15.0, abs=1e-12)
        assert report.mape == pytest.approx(10.0, abs=1e-12)

    def test_rmse_squared_is_mse(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            t = rng.uniform(1, 100, size=23)
            p = t + rng.normal(size=23)
            report = evaluate(t, p)
            assert report.rmse**2 == pytest.approx(report.mse, rel=1e-9)
            assert report.mae <= report.rmse + 1e-15

    def test_zero_true_value_names_index(self):
        with pytest.raises(MetricsError, match="index 1"):
            evaluate([1.0, 0.0, 2.0], [1.0, 1.0, 2.0])

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            evaluate([1.0], [1.0, 2.0])
