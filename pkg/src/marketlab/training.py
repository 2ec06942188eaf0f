"""Mini-batch training loop, prediction, and the four error metrics.

The validation split is the chronological tail of the samples (never
shuffled, never used in a gradient), batching is chronological unless
``shuffle`` is set, and the whole run is a deterministic function of
(seed, data, config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, MetricsError, ShapeMismatchError, TrainingDivergedError
from .frame import SupervisedTensors
from .lstm import LstmConfig, LstmParams, backward, forward, mse_loss
from .optim import adam_step, init_adam


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.0005
    epochs: int = 50
    batch_size: int = 25
    validation_fraction: float = 0.10
    seed: int = 0
    shuffle: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.validation_fraction <= 0.5:
            raise ConfigError(
                f"validation_fraction must be in [0, 0.5], got {self.validation_fraction}"
            )
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "validation_fraction": self.validation_fraction,
            "seed": self.seed,
            "shuffle": self.shuffle,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        keys = ("learning_rate", "epochs", "batch_size", "validation_fraction", "seed", "shuffle")
        return cls(**{k: d[k] for k in keys if k in d})


@dataclass
class TrainHistory:
    train_loss: list[float]
    val_loss: list[float]

    def to_csv(self) -> str:
        rows = ["epoch,train_loss,val_loss"]
        for e, (tr, va) in enumerate(zip(self.train_loss, self.val_loss), start=1):
            rows.append(f"{e},{tr!r},{va!r}")
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "TrainHistory":
        lines = [ln for ln in text.splitlines() if ln.strip()][1:]
        tr = [float(ln.split(",")[1]) for ln in lines]
        va = [float(ln.split(",")[2]) for ln in lines]
        return cls(tr, va)


def train(
    params: LstmParams,
    config: LstmConfig,
    tensors: SupervisedTensors,
    tcfg: TrainConfig,
) -> tuple[LstmParams, TrainHistory]:
    """Adam-train the network; returns updated parameters and loss history.

    The final ``validation_fraction`` of samples is held out for the per-epoch
    validation loss; their targets never enter a gradient computation.
    """
    n = len(tensors)
    if n <= tcfg.batch_size:
        raise ConfigError(f"need more samples ({n}) than batch_size ({tcfg.batch_size})")
    val_n = int(n * tcfg.validation_fraction)
    train_n = n - val_n
    x_train, y_train = tensors.inputs[:train_n], tensors.targets[:train_n]
    x_val, y_val = tensors.inputs[train_n:], tensors.targets[train_n:]

    history = TrainHistory([], [])
    if tcfg.epochs == 0:
        return params, history

    rng = np.random.default_rng(tcfg.seed)
    state = init_adam(config, lr=tcfg.learning_rate)
    for epoch in range(1, tcfg.epochs + 1):
        order = np.arange(train_n)
        if tcfg.shuffle:
            rng.shuffle(order)
        loss_sum = 0.0
        for batch_no, start in enumerate(range(0, train_n, tcfg.batch_size), start=1):
            idx = order[start : start + tcfg.batch_size]
            preds, cache = forward(x_train[idx], params, config, mode="train", rng=rng)
            loss = mse_loss(preds, y_train[idx])
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite training loss at epoch {epoch}, batch {batch_no}"
                )
            grads = backward(cache, x_train[idx], y_train[idx], params, config)
            params, state = adam_step(params, grads, state)
            loss_sum += loss * len(idx)
        history.train_loss.append(loss_sum / train_n)
        if val_n:
            val_preds, _ = forward(x_val, params, config, mode="eval")
            history.val_loss.append(mse_loss(val_preds, y_val))
        else:
            history.val_loss.append(float("nan"))
    return params, history


def predict(params: LstmParams, config: LstmConfig, inputs) -> np.ndarray:
    """Deterministic eval-mode predictions for a [B, L, F] batch."""
    preds, _ = forward(inputs, params, config, mode="eval")
    return preds


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    rmse: float
    mae: float
    mape: float

    def to_dict(self) -> dict:
        return {"mse": self.mse, "rmse": self.rmse, "mae": self.mae, "mape": self.mape}


def evaluate(true_values, predictions) -> MetricsReport:
    """MSE / RMSE / MAE / MAPE of predictions against true values.

    MAPE is the per-point form 100/n * sum(|t - p| / |t|), so every true
    value must be non-zero. Callers are expected to pass original-scale
    (inverse-transformed) values.
    """
    t = np.asarray(true_values, dtype=np.float64)
    p = np.asarray(predictions, dtype=np.float64)
    if t.shape != p.shape or t.ndim != 1:
        raise ShapeMismatchError(f"true {t.shape} vs predictions {p.shape}")
    if t.size == 0:
        raise ShapeMismatchError("empty input")
    zero = np.nonzero(t == 0.0)[0]
    if zero.size:
        raise MetricsError(f"true value is zero at index {int(zero[0])}; MAPE undefined")
    err = t - p
    mse = float(err @ err) / t.size
    return MetricsReport(
        mse=mse,
        rmse=math.sqrt(mse),
        mae=float(np.abs(err).mean()),
        mape=float(100.0 * np.mean(np.abs(err) / np.abs(t))),
    )
