"""Acceptance criteria, shared by ``btcabm verify`` and the test suite.

Each ``criterion_N`` returns a :class:`Verdict`.  Simulation-backed
criteria read from an :class:`AcceptanceRuns` cache so the four ensembles
(base, two gamma1 variants, Gox) are simulated once per process.
"""
from __future__ import annotations

import dataclasses
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import csvio, stylized
from .calibration import CalibrationSet, block_reward_per_day, power_per_hash, traders_target
from .engine import RunResult, SimConfig, run
from .orderbook import Order, OrderBook, Side, book_class
from .orderbook.reference import NaiveBook

log = logging.getLogger(__name__)

SWEEP = (0.15, 0.25, 0.35)


@dataclass
class Verdict:
    number: int
    title: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} {mark}  {self.title}: {self.detail}"


@dataclass
class RunSummary:
    """What the criteria need from one run (the trader table is dropped)."""

    seed: int
    columns: dict
    stats: dict
    wealth: dict
    btc_error: float
    cash_error: float
    reserve_error: float
    initial_miner_pc: tuple[float, float]


def summarize_run(result: RunResult) -> RunSummary:
    cols = result.columns()
    p0 = result.config.calibration.p0
    prices = np.concatenate([[p0], cols["close"]])
    stats = stylized.return_stats(prices)
    wealth = stylized.wealth_report(cols, result.traders, result.initial_ids, result.initial_wealth)
    from .population import Population

    tr = result.traders
    ids = result.initial_ids[tr.population[result.initial_ids] == Population.MINER]
    a_end = tr.cash[ids] + tr.btc[ids] * cols["close"][-1]
    pc = (float(result.initial_wealth[ids].mean()), float(a_end.mean())) if ids.shape[0] else (0.0, 0.0)
    return RunSummary(
        seed=result.seed, columns=cols, stats=stats, wealth=wealth,
        btc_error=float(np.max(result.btc_error, initial=0.0)),
        cash_error=float(np.max(result.cash_error, initial=0.0)),
        reserve_error=float(np.max(result.reserve_error, initial=0.0)),
        initial_miner_pc=pc,
    )


class AcceptanceRuns:
    """Lazily simulated ensembles keyed by variant name."""

    def __init__(self, seeds, calibration: CalibrationSet | None = None, progress=None):
        self.seeds = list(seeds)
        self.calibration = calibration or CalibrationSet()
        self.progress = progress
        self._cache: dict[str, list[RunSummary]] = {}

    def config(self, variant: str) -> SimConfig:
        cal = self.calibration
        if variant == "gox":
            return SimConfig(calibration=cal, scenario="gox")
        if variant == "base":
            return SimConfig(calibration=cal)
        return SimConfig(calibration=dataclasses.replace(cal, gamma1_mean=float(variant)))

    def get(self, variant: str) -> list[RunSummary]:
        if variant not in self._cache:
            out = []
            cfg = self.config(variant)
            for seed in self.seeds:
                if self.progress:
                    self.progress(f"simulating {variant} seed {seed}")
                out.append(summarize_run(run(cfg, seed)))
            self._cache[variant] = out
        return self._cache[variant]

    def base(self):
        return self.get("base")

    def sweep(self, gamma1: float):
        return self.base() if gamma1 == self.calibration.gamma1_mean else self.get(repr(gamma1))

    def gox(self):
        return self.get("gox")

    def all_runs(self):
        return [r for runs in self._cache.values() for r in runs]


def _count(flags) -> int:
    return int(sum(bool(f) for f in flags))


# ---- 1: calibration anchors ----------------------------------------------

def criterion_1(calib: CalibrationSet | None = None) -> Verdict:
    c = calib or CalibrationSet()
    n1 = traders_target(1, c)
    n_end = traders_target(1856, c)
    p_end = power_per_hash(1856, c) * 1e9  # W per GH/s
    total = sum(block_reward_per_day(t, c) for t in range(1, 1857))
    expected = 853 * 72 + 1003 * 36
    ok = (abs(n1 - 160) <= 1 and abs(n_end - 39649) <= 40 and 0.24 <= p_end <= 0.30
          and total == expected)
    return Verdict(1, "calibration anchors", ok,
                   f"N(1)={n1:.2f} N(1856)={n_end:.1f} P(1856)={p_end:.4f} W/(GH/s) "
                   f"rewards={total:g} (expected {expected})",
                   {"N1": n1, "N1856": n_end, "P1856": p_end, "rewards": total})


# ---- 2: order book vs brute force ------------------------------------------

def random_stream(rng: np.random.Generator, max_orders: int = 200, price: float = 10.0):
    """A random order stream: (orders, expire_at) where expire_at maps index -> step to expire."""
    n = int(rng.integers(1, max_orders + 1))
    orders = []
    step = 1
    grid = np.arange(8.0, 12.01, 0.25)  # coarse grid so price ties happen
    for k in range(n):
        if rng.random() < 0.1:
            step += 1
        side = Side.BUY if rng.random() < 0.5 else Side.SELL
        market = rng.random() < 0.2
        limit = 0.0 if market else float(rng.choice(grid))
        amount = float(rng.choice([1.0, 2.0, 0.5, 3.0])) if rng.random() < 0.5 \
            else float(rng.uniform(0.01, 5.0))
        expiry = step + int(rng.integers(0, 4)) if rng.random() < 0.8 else 2**62
        escrow = price if market else limit
        budget = amount * escrow if side == Side.BUY else 0.0
        if side == Side.BUY and market and rng.random() < 0.3:
            budget *= float(rng.uniform(0.3, 1.0))  # market buy cut short by its escrow
        orders.append(Order(k, int(rng.integers(0, 20)), side, amount, limit, step, expiry, budget))
    return orders


def replay(book, orders):
    """Feed a stream into ``book``, expiring at each day change; returns the event log."""
    events = []
    step = orders[0].issue_step if orders else 0
    for o in orders:
        if o.issue_step != step:
            gone = book.expire(step)
            events.append(("expire", sorted(g if isinstance(g, int) else g.id for g in gone)))
            step = o.issue_step
        for tr in book.insert(o):
            events.append(("trade", tr.buy_order_id, tr.sell_order_id, tr.price, tr.quantity))
    return events


def criterion_2(streams: int = 1000, max_orders: int = 200, seed: int = 20150930,
                backend: str | None = None) -> Verdict:
    rng = np.random.default_rng(seed)
    cls = OrderBook if backend is None else book_class(backend)
    mismatches = 0
    trades = 0
    for _ in range(streams):
        orders = random_stream(rng, max_orders)
        fast = replay(cls(10.0, record_trades=True), orders)
        slow = replay(NaiveBook(10.0), orders)
        trades += sum(1 for e in slow if e[0] == "trade")
        if fast != slow:
            mismatches += 1
    return Verdict(2, "order book equals brute-force matcher", mismatches == 0,
                   f"{streams} streams, {trades} trades, {mismatches} mismatching streams "
                   f"(backend {cls.backend})",
                   {"streams": streams, "trades": trades, "mismatches": mismatches})


# ---- 3: conservation ---------------------------------------------------------

def criterion_3(runs: list[RunSummary], tol: float = 1e-9) -> Verdict:
    btc = max(r.btc_error for r in runs)
    cash = max(r.cash_error for r in runs)
    res = max(r.reserve_error for r in runs)
    ok = btc <= tol and cash <= tol and res <= tol
    return Verdict(3, "BTC and cash conservation", ok,
                   f"{len(runs)} runs, max rel. error BTC {btc:.2e}, cash {cash:.2e}, "
                   f"escrow ledger {res:.2e} (tol {tol:g})",
                   {"btc": btc, "cash": cash, "reserve": res})


# ---- 4-6: stylized facts -------------------------------------------------------

def criterion_4(runs: list[RunSummary]) -> Verdict:
    k = [r.stats["excess_kurtosis"] for r in runs]
    n_ok = _count(x > 0 for x in k)
    need = math.ceil(0.9 * len(runs))
    return Verdict(4, "fat tails", n_ok >= need,
                   f"excess kurtosis > 0 in {n_ok}/{len(runs)} seeds (need {need}); "
                   f"median {np.median(k):.2f}", {"kurtosis": k})


def criterion_5(runs: list[RunSummary]) -> Verdict:
    abs_ok = _count(r.stats["mean_acf_abs"] > r.stats["noise_band"] for r in runs)
    raw_ok = _count(r.stats["mean_abs_acf_raw"] < 0.1 for r in runs)
    need = math.ceil(0.8 * len(runs))
    return Verdict(5, "volatility clustering", abs_ok >= need and raw_ok >= need,
                   f"|r| ACF above band in {abs_ok}/{len(runs)}, raw |ACF| < 0.1 in "
                   f"{raw_ok}/{len(runs)} (need {need} each)",
                   {"mean_acf_abs": [r.stats["mean_acf_abs"] for r in runs],
                    "mean_abs_acf_raw": [r.stats["mean_abs_acf_raw"] for r in runs]})


def criterion_6(runs: list[RunSummary]) -> Verdict:
    adf = [r.stats["adf_statistic"] for r in runs]
    n_ok = _count(a > stylized.ADF_CRITICAL_5PCT for a in adf)
    need = math.ceil(0.9 * len(runs))
    return Verdict(6, "unit root in log price", n_ok >= need,
                   f"ADF > {stylized.ADF_CRITICAL_5PCT} in {n_ok}/{len(runs)} seeds (need {need}); "
                   f"median {np.median(adf):.2f}", {"adf": adf})


# ---- 7-9: miners -------------------------------------------------------------

def miner_per_capita(runs: list[RunSummary]) -> np.ndarray:
    """Seed-mean miner wealth-per-capita series."""
    return np.nanmean([stylized.per_capita(r.columns["wealth_miner"], r.columns["n_miner"])
                       for r in runs], axis=0)


def criterion_7(runs: list[RunSummary]) -> Verdict:
    pc = miner_per_capita(runs)
    start, end = float(pc[0]), float(pc[-1])
    corr = [r.wealth["miner_wealth_hash_correlation"] for r in runs]
    corr = [c for c in corr if c is not None]
    mean_corr = float(np.mean(corr)) if corr else float("nan")
    init_start = float(np.mean([r.initial_miner_pc[0] for r in runs]))
    init_end = float(np.mean([r.initial_miner_pc[1] for r in runs]))
    ok = (1000 / 2 <= start <= 1000 * 2 and 14000 / 3 <= end <= 14000 * 3 and mean_corr > 0.5)
    return Verdict(7, "miner economics at gamma1=0.15", ok,
                   f"miner wealth per capita {start:,.0f} -> {end:,.0f} $ (targets 1,000 x/÷2, "
                   f"14,000 x/÷3); initial miners only {init_start:,.0f} -> {init_end:,.0f} $; "
                   f"corr(wealth, hash) {mean_corr:.3f} (> 0.5)",
                   {"start": start, "end": end, "corr": mean_corr,
                    "initial_start": init_start, "initial_end": init_end})


def criterion_8(acc: AcceptanceRuns) -> Verdict:
    finals = [float(miner_per_capita(acc.sweep(g))[-1]) for g in SWEEP]
    ok = finals[0] > finals[1] > finals[2]
    detail = " > ".join(f"{v:,.0f} $ (gamma1 {g})" for g, v in zip(SWEEP, finals))
    return Verdict(8, "gamma1 sweep monotone", ok, detail, {"final_per_capita": finals})


def criterion_9(runs: list[RunSummary], scale: float = 100.0) -> Verdict:
    power = float(np.mean([r.columns["total_power"][-1] for r in runs])) * scale / 1e6
    return Verdict(9, "network power at the last step", 50.0 <= power <= 500.0,
                   f"{power:.1f} MW (range 50-500)", {"MW": power})


# ---- 10: Gox bubble --------------------------------------------------------------

def criterion_10(runs: list[RunSummary]) -> Verdict:
    price = np.mean([r.columns["close"] for r in runs], axis=0)
    steps = runs[0].columns["step"]
    at = {int(s): k for k, s in enumerate(steps)}
    p1000 = float(price[at[1000]])
    peak_win = price[at[1100]:at[1300] + 1]
    peak = float(peak_win.max())
    peak_step = int(steps[at[1100] + int(peak_win.argmax())])
    trough = float(price[at[1300]:at[1450] + 1].min())
    ok = peak >= 2 * p1000 and trough <= 0.8 * peak
    return Verdict(10, "Gox bubble and crash", ok,
                   f"p(1000)={p1000:.2f}, peak {peak:.2f} at step {peak_step} "
                   f"({peak / p1000:.2f}x, need 2x), trough {trough:.2f} "
                   f"({trough / peak:.2f} of peak, need <= 0.8)",
                   {"p1000": p1000, "peak": peak, "trough": trough})


# ---- 11: determinism -----------------------------------------------------------

def run_csv_bytes(config: SimConfig, seed: int) -> bytes:
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / f"run_{seed}.csv"
        csvio.write_run_csv(path, run(config, seed).records)
        return path.read_bytes()


def criterion_11(config: SimConfig | None = None, seed: int = 1) -> Verdict:
    config = config or SimConfig()
    a = run_csv_bytes(config, seed)
    b = run_csv_bytes(config, seed)
    return Verdict(11, "determinism", a == b,
                   f"seed {seed}: two runs give {'identical' if a == b else 'different'} "
                   f"run CSVs ({len(a)} bytes)", {"bytes": len(a)})


# ---- all together ----------------------------------------------------------------

def run_all(seeds, calibration: CalibrationSet | None = None, progress=None,
            acc: AcceptanceRuns | None = None) -> list[Verdict]:
    acc = acc or AcceptanceRuns(seeds, calibration, progress)
    base = acc.base()
    verdicts = [criterion_1(acc.calibration), criterion_2()]
    gox = acc.gox()
    for g in SWEEP:
        acc.sweep(g)
    verdicts += [
        criterion_3(acc.all_runs()),
        criterion_4(base),
        criterion_5(base),
        criterion_6(base),
        criterion_7(base),
        criterion_8(acc),
        criterion_9(base),
        criterion_10(gox),
        criterion_11(acc.config("base"), acc.seeds[0]),
    ]
    return verdicts


def verdict_json(verdicts: list[Verdict], seeds) -> dict:
    return {
        "seeds": list(seeds),
        "passed": all(v.passed for v in verdicts),
        "criteria": {str(v.number): {"title": v.title, "passed": v.passed, "detail": v.detail,
                                     "values": v.values} for v in verdicts},
    }


def format_report(verdicts: list[Verdict]) -> str:
    buf = io.StringIO()
    for v in verdicts:
        buf.write(v.line() + "\n")
    return buf.getvalue()
