"""From-scratch LSTM regressor in float64 numpy.

Topology (single fixed head): unroll the LSTM over L timesteps from zero
states, take the final hidden state, apply inverted dropout (train mode),
then dense -> sigmoid -> dense -> linear scalar output.

Cell equations per step, with z = [h_prev, x] of width H+F:

    f = sigmoid(W_f z + b_f)      i = sigmoid(W_i z + b_i)
    g = tanh(W_c z + b_c)         o = sigmoid(W_o z + b_o)
    c = f * c_prev + i * g        h = o * tanh(c)

Gradients are hand-derived backpropagation through time for exactly this
topology; `marketlab.optim.gradient_check` verifies them against central
finite differences.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import CheckpointError, ConfigError, ShapeMismatchError


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function (branch on sign, no overflow)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(frozen=True)
class LstmConfig:
    input_dim: int
    hidden_dim: int
    lookback: int
    dense_dim: int
    dropout_rate: float = 0.2

    def __post_init__(self):
        for name in ("input_dim", "hidden_dim", "lookback", "dense_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")

    @property
    def output_dim(self) -> int:
        return 1  # the regression head is fixed to a single scalar

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "lookback": self.lookback,
            "dense_dim": self.dense_dim,
            "dropout_rate": self.dropout_rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LstmConfig":
        return cls(**{k: d[k] for k in ("input_dim", "hidden_dim", "lookback", "dense_dim", "dropout_rate")})


@dataclass
class LstmParams:
    """All trainable tensors; also reused as the container for gradients."""

    w_f: np.ndarray  # [H, H+F]
    w_i: np.ndarray
    w_c: np.ndarray
    w_o: np.ndarray
    b_f: np.ndarray  # [H]
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray
    w_d1: np.ndarray  # [D, H]
    b_d1: np.ndarray  # [D]
    w_d2: np.ndarray  # [1, D]
    b_d2: np.ndarray  # [1]

    def blocks(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def size(self) -> int:
        return sum(int(a.size) for a in self.blocks().values())

    def copy(self) -> "LstmParams":
        return LstmParams(**{k: v.copy() for k, v in self.blocks().items()})

    @classmethod
    def zeros(cls, config: LstmConfig) -> "LstmParams":
        f, h, d = config.input_dim, config.hidden_dim, config.dense_dim
        z = np.zeros
        return cls(
            w_f=z((h, h + f)), w_i=z((h, h + f)), w_c=z((h, h + f)), w_o=z((h, h + f)),
            b_f=z(h), b_i=z(h), b_c=z(h), b_o=z(h),
            w_d1=z((d, h)), b_d1=z(d), w_d2=z((1, d)), b_d2=z(1),
        )


def param_count(config: LstmConfig) -> int:
    """Closed-form trainable scalar count for the fixed topology."""
    f, h, d = config.input_dim, config.hidden_dim, config.dense_dim
    return 4 * ((f + h) * h + h) + (h * d + d) + (d + 1)


def init_params(config: LstmConfig, seed: int) -> LstmParams:
    """Uniform Glorot weights (per-matrix fan bounds), zero biases."""
    rng = np.random.default_rng(seed)
    params = LstmParams.zeros(config)

    def glorot(shape: tuple[int, int]) -> np.ndarray:
        fan_out, fan_in = shape
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    for name in ("w_f", "w_i", "w_c", "w_o", "w_d1", "w_d2"):
        setattr(params, name, glorot(getattr(params, name).shape))
    return params


def _check_params(params: LstmParams, config: LstmConfig):
    expect = {k: v.shape for k, v in LstmParams.zeros(config).blocks().items()}
    for name, arr in params.blocks().items():
        if arr.shape != expect[name]:
            raise ShapeMismatchError(f"{name} has shape {arr.shape}, config needs {expect[name]}")


def lstm_cell_forward(x_t, h_prev, c_prev, params: LstmParams):
    """One cell step. Accepts single vectors or [B, .] batches.

    Returns (h_t, c_t, gates) where gates holds f/i/g/o plus the
    concatenated input z and tanh(c_t), everything the backward pass needs.
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    squeeze = x_t.ndim == 1
    x2 = np.atleast_2d(x_t)
    h2 = np.atleast_2d(np.asarray(h_prev, dtype=np.float64))
    c2 = np.atleast_2d(np.asarray(c_prev, dtype=np.float64))
    h_dim = params.w_f.shape[0]
    if x2.shape[1] != params.w_f.shape[1] - h_dim or h2.shape[1] != h_dim:
        raise ShapeMismatchError(
            f"cell got x width {x2.shape[1]}, h width {h2.shape[1]} "
            f"for gate matrices {params.w_f.shape}"
        )
    z = np.concatenate([h2, x2], axis=1)
    f = sigmoid(z @ params.w_f.T + params.b_f)
    i = sigmoid(z @ params.w_i.T + params.b_i)
    g = np.tanh(z @ params.w_c.T + params.b_c)
    o = sigmoid(z @ params.w_o.T + params.b_o)
    c = f * c2 + i * g
    tc = np.tanh(c)
    h = o * tc
    gates = {"z": z, "f": f, "i": i, "g": g, "o": o, "c_prev": c2, "tanh_c": tc}
    if squeeze:
        return h[0], c[0], gates
    return h, c, gates


@dataclass
class ForwardCache:
    """Everything BPTT needs from one forward pass; arrays are [L, B, ...]."""

    z: np.ndarray        # [L, B, H+F]
    f: np.ndarray        # [L, B, H]
    i: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray
    dropout_mask: np.ndarray  # [B, H], entries 0 or 1/keep
    h_dropped: np.ndarray     # [B, H]
    a1: np.ndarray            # [B, D] sigmoid activations
    predictions: np.ndarray   # [B]
    mode: str

    def __len__(self) -> int:
        return self.z.shape[0]


def forward(batch, params: LstmParams, config: LstmConfig, mode: str = "eval", rng=None):
    """Run the full network on a [B, L, F] batch; returns (predictions, cache).

    Train mode applies inverted dropout to the final hidden state, drawing the
    mask from ``rng``; eval mode is a deterministic pure function.
    """
    if mode not in ("train", "eval"):
        raise ConfigError(f"mode must be 'train' or 'eval', got {mode!r}")
    _check_params(params, config)
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 3 or batch.shape[1] != config.lookback or batch.shape[2] != config.input_dim:
        raise ShapeMismatchError(
            f"batch shape {batch.shape} does not match [B, {config.lookback}, {config.input_dim}]"
        )
    b, l, f_dim = batch.shape
    h_dim = config.hidden_dim

    z = np.empty((l, b, h_dim + f_dim))
    f_g = np.empty((l, b, h_dim))
    i_g = np.empty_like(f_g)
    g_g = np.empty_like(f_g)
    o_g = np.empty_like(f_g)
    c_s = np.empty_like(f_g)
    tc_s = np.empty_like(f_g)

    h = np.zeros((b, h_dim))
    c = np.zeros((b, h_dim))
    for t in range(l):
        h, c, gates = lstm_cell_forward(batch[:, t, :], h, c, params)
        z[t] = gates["z"]
        f_g[t], i_g[t], g_g[t], o_g[t] = gates["f"], gates["i"], gates["g"], gates["o"]
        c_s[t], tc_s[t] = c, gates["tanh_c"]

    if mode == "train" and config.dropout_rate > 0.0:
        if rng is None:
            raise ConfigError("train-mode forward with dropout needs an rng")
        keep = 1.0 - config.dropout_rate
        mask = (rng.random((b, h_dim)) >= config.dropout_rate) / keep
    else:
        mask = np.ones((b, h_dim))
    h_dropped = h * mask

    a1 = sigmoid(h_dropped @ params.w_d1.T + params.b_d1)
    y = (a1 @ params.w_d2.T + params.b_d2)[:, 0]

    cache = ForwardCache(
        z=z, f=f_g, i=i_g, g=g_g, o=o_g, c=c_s, tanh_c=tc_s,
        dropout_mask=mask, h_dropped=h_dropped, a1=a1, predictions=y, mode=mode,
    )
    return y, cache


def mse_loss(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeMismatchError(f"pred {pred.shape} vs target {target.shape}")
    if pred.size == 0:
        raise ShapeMismatchError("empty input")
    d = target - pred
    return float(d @ d) / d.size


def backward(cache: ForwardCache, batch, target, params: LstmParams, config: LstmConfig) -> LstmParams:
    """Exact gradients of mse_loss(forward(batch), target) w.r.t. every parameter.

    Walks the dense head backward, then the L timesteps in reverse,
    accumulating gate-weight gradients across time and batch. The dropout
    mask recorded in the cache is respected.
    """
    batch = np.asarray(batch, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    l, b = cache.z.shape[0], cache.z.shape[1]
    h_dim = config.hidden_dim
    if batch.shape != (b, l, config.input_dim):
        raise ShapeMismatchError(f"batch shape {batch.shape} does not match cache [{b}, {l}, ...]")
    if cache.z.shape[2] != h_dim + config.input_dim:
        raise ShapeMismatchError("cache does not match config dimensions")
    if target.shape != (b,):
        raise ShapeMismatchError(f"target shape {target.shape}, expected ({b},)")

    grads = LstmParams.zeros(config)

    # dense head: loss = mean((t - y)^2)
    dy = 2.0 * (cache.predictions - target) / b            # [B]
    grads.w_d2 = dy[None, :] @ cache.a1                    # [1, D]
    grads.b_d2 = np.array([dy.sum()])
    da1 = dy[:, None] @ params.w_d2                        # [B, D]
    dz1 = da1 * cache.a1 * (1.0 - cache.a1)
    grads.w_d1 = dz1.T @ cache.h_dropped                   # [D, H]
    grads.b_d1 = dz1.sum(axis=0)
    dh = (dz1 @ params.w_d1) * cache.dropout_mask          # [B, H]

    dc = np.zeros((b, h_dim))
    for t in range(l - 1, -1, -1):
        f, i, g, o = cache.f[t], cache.i[t], cache.g[t], cache.o[t]
        tc = cache.tanh_c[t]
        c_prev = cache.c[t - 1] if t > 0 else np.zeros((b, h_dim))

        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        df = dc * c_prev
        di = dc * g
        dg = dc * i

        da_f = df * f * (1.0 - f)
        da_i = di * i * (1.0 - i)
        da_c = dg * (1.0 - g * g)
        da_o = do * o * (1.0 - o)

        z_t = cache.z[t]
        grads.w_f += da_f.T @ z_t
        grads.w_i += da_i.T @ z_t
        grads.w_c += da_c.T @ z_t
        grads.w_o += da_o.T @ z_t
        grads.b_f += da_f.sum(axis=0)
        grads.b_i += da_i.sum(axis=0)
        grads.b_c += da_c.sum(axis=0)
        grads.b_o += da_o.sum(axis=0)

        dz = da_f @ params.w_f + da_i @ params.w_i + da_c @ params.w_c + da_o @ params.w_o
        dh = dz[:, :h_dim]
        dc = dc * f
    return grads


CHECKPOINT_FORMAT = "marketlab-checkpoint-v1"


def save_checkpoint(path, params: LstmParams, config: LstmConfig, seed: int) -> Path:
    """Write a self-describing artifact: config, seed, and every tensor.

    Tensor bytes are stored little-endian float64 in base64, so load returns
    bitwise-identical parameters.
    """
    payload = {
        "format": CHECKPOINT_FORMAT,
        "config": config.to_dict(),
        "seed": seed,
        "params": {
            name: {
                "shape": list(arr.shape),
                "dtype": "<f8",
                "data": base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii"),
            }
            for name, arr in params.blocks().items()
        },
    }
    path = Path(path)
    path.write_bytes(json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("ascii"))
    return path


def load_checkpoint(path) -> tuple[LstmParams, LstmConfig, int]:
    try:
        payload = json.loads(Path(path).read_bytes())
    except (OSError, ValueError) as e:
        raise CheckpointError(f"unreadable checkpoint {path}: {e}") from e
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"unknown checkpoint format {payload.get('format')!r}")
    config = LstmConfig.from_dict(payload["config"])
    blocks = {}
    for name, spec in payload["params"].items():
        raw = base64.b64decode(spec["data"])
        arr = np.frombuffer(raw, dtype=spec["dtype"]).reshape(spec["shape"]).astype(np.float64)
        blocks[name] = arr
    try:
        params = LstmParams(**blocks)
    except TypeError as e:
        raise CheckpointError(f"checkpoint tensors do not match the topology: {e}") from e
    _check_params(params, config)
    return params, config, int(payload["seed"])
