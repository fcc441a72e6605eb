#!/usr/bin/env python3
"""Writes tests/data/BTC-USD.csv: a seeded synthetic daily series in the Yahoo
Finance download schema, with BTC-like price level, volatility and volume, and a
few all-null rows like the ones Yahoo emits for missing days."""

import argparse
import datetime as dt

import numpy as np

parser = argparse.ArgumentParser()
parser.add_argument("--out", default="tests/data/BTC-USD.csv")
parser.add_argument("--days", type=int, default=400)
parser.add_argument("--seed", type=int, default=20210101)
args = parser.parse_args()

rng = np.random.default_rng(args.seed)
start = dt.date(2021, 1, 1)
log_ret = rng.standard_t(df=4, size=args.days) * 0.025 + 0.0005
close = 29000.0 * np.exp(np.cumsum(log_ret))
prev = np.concatenate([[29000.0], close[:-1]])
open_ = prev * np.exp(rng.normal(0, 0.002, args.days))
wick_hi = np.abs(rng.normal(0, 0.015, args.days))
wick_lo = np.abs(rng.normal(0, 0.015, args.days))
high = np.maximum(open_, close) * (1 + wick_hi)
low = np.minimum(open_, close) * (1 - wick_lo)
volume = np.round(np.exp(rng.normal(np.log(3.5e10), 0.35, args.days)))
null_days = set(rng.choice(np.arange(20, args.days - 20), size=3, replace=False).tolist())

with open(args.out, "w", newline="\n") as f:
    f.write("Date,Open,High,Low,Close,Adj Close,Volume\n")
    for k in range(args.days):
        day = (start + dt.timedelta(days=k)).isoformat()
        if k in null_days:
            f.write(f"{day},null,null,null,null,null,null\n")
            continue
        f.write(
            f"{day},{open_[k]:.6f},{high[k]:.6f},{low[k]:.6f},{close[k]:.6f},"
            f"{close[k]:.6f},{int(volume[k])}\n"
        )
