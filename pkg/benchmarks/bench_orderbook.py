"""Compare the compiled and pure-Python order-book cores.

Times two workloads on each available backend:

* ``stream``: a synthetic stream of limit and market orders submitted
  straight into ``BookCore.submit`` with daily expiry;
* ``simulation``: a short full simulation (``--steps`` days).

Usage: ``python benchmarks/bench_orderbook.py [--orders N] [--steps T] [--repeat R]``
"""
from __future__ import annotations

import argparse
import dataclasses
import time

import numpy as np

from btcabm.calibration import CalibrationSet
from btcabm.engine import SimConfig, run
from btcabm.orderbook import BACKENDS, book_class


def make_stream(n: int, seed: int = 7):
    rng = np.random.default_rng(seed)
    side = rng.integers(0, 2, n)
    market = rng.random(n) < 0.2
    limit = np.where(market, 0.0, 10.0 * rng.normal(1.0, 0.02, n))
    amount = rng.uniform(0.01, 5.0, n)
    expiry = rng.integers(0, 4, n)
    return side, limit, amount, expiry


def bench_stream(backend: str, stream, per_day: int = 500) -> float:
    side, limit, amount, expiry = stream
    book = book_class(backend)(10.0, record_trades=False)
    t0 = time.perf_counter()
    step = 1
    for k in range(side.shape[0]):
        if k and k % per_day == 0:
            book.expire(step, False)
            step += 1
        lim = float(limit[k])
        budget = float(amount[k]) * (lim if lim > 0 else 10.0)
        book.submit(k, k % 97, int(side[k]), float(amount[k]), lim, budget, step, step + int(expiry[k]))
    return time.perf_counter() - t0


def bench_sim(backend: str, steps: int, seed: int = 1) -> float:
    cal = dataclasses.replace(CalibrationSet(), horizon=steps)
    t0 = time.perf_counter()
    run(SimConfig(calibration=cal, backend=backend), seed)
    return time.perf_counter() - t0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--orders", type=int, default=200_000)
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    stream = make_stream(args.orders)
    rows = []
    for backend in sorted(BACKENDS):
        s = min(bench_stream(backend, stream) for _ in range(args.repeat))
        m = min(bench_sim(backend, args.steps) for _ in range(args.repeat))
        rows.append((backend, s, m))
    print(f"{'backend':<8} {'stream s':>10} {'orders/s':>12} {'sim s':>8}")
    for backend, s, m in rows:
        print(f"{backend:<8} {s:10.3f} {args.orders / s:12,.0f} {m:8.2f}")
    if len(rows) == 2:
        (_, s_c, m_c), (_, s_p, m_p) = rows
        print(f"speed-up of cython over python: stream {s_p / s_c:.1f}x, simulation {m_p / m_c:.1f}x")


if __name__ == "__main__":
    main()
