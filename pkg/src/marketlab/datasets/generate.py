"""Regenerate the bundled synthetic datasets (run: python -m marketlab.datasets.generate).

market7.csv     seven correlated close-price columns, 2000 trading days
synth_ohlc.csv  OHLC frame for a target plus three comparison symbols
ablate_quick.json  small four-variant ablation spec over synth_ohlc.csv
"""

from __future__ import annotations

import datetime as dt
import json
from pathlib import Path

import numpy as np

from ..frame import AlignedFrame

OUT_DIR = Path(__file__).parent


def business_days(start: dt.date, count: int) -> list[dt.date]:
    days = []
    d = start
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days


def make_market7(n: int = 2000, seed: int = 20240501) -> AlignedFrame:
    rng = np.random.default_rng(seed)
    oil = rng.normal(0.0, 0.012, n)
    market = rng.normal(0.0, 0.009, n)
    metal = rng.normal(0.0, 0.010, n)

    def price(base: float, loadings: dict[str, float], idio: float) -> np.ndarray:
        r = (
            loadings.get("oil", 0.0) * oil
            + loadings.get("market", 0.0) * market
            + loadings.get("metal", 0.0) * metal
            + rng.normal(0.0, idio, n)
        )
        return base * np.exp(np.cumsum(r))

    columns = {
        "USD.close": price(90.0, {"oil": -0.45, "market": -0.1}, 0.004),
        "WTI.close": price(60.0, {"oil": 1.0}, 0.004),
        "GOLD.close": price(1500.0, {"metal": 1.0, "market": -0.15}, 0.004),
        "BP.close": price(320.0, {"oil": 0.55, "market": 0.55, "metal": -0.25}, 0.006),
        "TOTAL.close": price(40.0, {"oil": 0.5, "market": 0.6, "metal": -0.3}, 0.006),
        "SLB.close": price(35.0, {"oil": 0.45, "market": 0.35, "metal": -0.2}, 0.008),
        "CNE.close": price(180.0, {"oil": 0.4, "market": 0.25}, 0.009),
    }
    return AlignedFrame(tuple(business_days(dt.date(2015, 1, 5), n)), columns)


def make_synth_ohlc(n: int = 480, seed: int = 20240502) -> AlignedFrame:
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    base = 100.0 + 0.03 * t + 9.0 * np.sin(2 * np.pi * t / 120.0)
    close = base + rng.normal(0.0, 0.8, n)

    shared = np.diff(np.log(np.maximum(close, 1e-6)), prepend=np.log(close[0]))
    wti = 60.0 * np.exp(np.cumsum(0.7 * shared + rng.normal(0.0, 0.006, n)))
    usd = 95.0 * np.exp(np.cumsum(-0.5 * shared + rng.normal(0.0, 0.004, n)))
    gold = 1600.0 * np.exp(np.cumsum(rng.normal(0.0, 0.007, n)))

    def ohlc(closes: np.ndarray, spread: float) -> dict[str, np.ndarray]:
        opens = np.empty_like(closes)
        opens[0] = closes[0]
        opens[1:] = closes[:-1] * (1.0 + rng.normal(0.0, spread / 3, n - 1))
        hi_pad = np.abs(rng.normal(0.0, spread, n))
        lo_pad = np.abs(rng.normal(0.0, spread, n))
        highs = np.maximum(opens, closes) * (1.0 + hi_pad)
        lows = np.minimum(opens, closes) * (1.0 - lo_pad)
        return {"open": opens, "high": highs, "low": lows, "close": closes}

    columns: dict[str, np.ndarray] = {}
    for symbol, closes, spread in (
        ("ACME", close, 0.004),
        ("WTI", wti, 0.005),
        ("USD", usd, 0.002),
        ("GOLD", gold, 0.003),
    ):
        for field, values in ohlc(closes, spread).items():
            columns[f"{symbol}.{field}"] = values
    return AlignedFrame(tuple(business_days(dt.date(2021, 1, 4), n)), columns)


def main():
    market7 = make_market7()
    (OUT_DIR / "market7.csv").write_text(market7.to_csv())

    synth = make_synth_ohlc()
    (OUT_DIR / "synth_ohlc.csv").write_text(synth.to_csv())

    n = len(synth)
    train_last = synth.dates[n - 101]
    test_first = synth.dates[n - 100]
    test_last = synth.dates[-1]
    spec = {
        "data": "dataset:synth_ohlc.csv",
        "target": "ACME",
        "variants": ["main", "+WTI", "+USD", "+GOLD"],
        "train_last": train_last.isoformat(),
        "test_first": test_first.isoformat(),
        "test_last": test_last.isoformat(),
        "augment_ohlc": False,
        "model": {"hidden_dim": 12, "lookback": 12, "dense_dim": 12, "dropout_rate": 0.1},
        "train": {
            "learning_rate": 0.0005,
            "epochs": 8,
            "batch_size": 25,
            "validation_fraction": 0.1,
            "seed": 7,
            "shuffle": False,
        },
    }
    (OUT_DIR / "ablate_quick.json").write_text(json.dumps(spec, indent=2) + "\n")
    print(f"wrote market7.csv ({len(market7)} rows), synth_ohlc.csv ({n} rows), ablate_quick.json")


if __name__ == "__main__":
    main()
