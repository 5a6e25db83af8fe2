"""Daily simulation loop and Monte Carlo ensemble runner.

Event order within step ``t``:

1. admit entrants; non-miners place their entry buy order
2. due miners decide (entrants included), then a trigger sample if the
   price rose enough over the trigger window
3. active Random / Chartist / Gox traders place orders, shuffled
4. fills settle inside the book as they happen
5. expire orders with expiry <= t
6. distribute the block reward
7. bill electricity
8. record the day
"""
from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import agents
from .agents import OrderDraws, PriceHistory, adaptive_sigma
from .calibration import CalibrationSet, block_reward_per_day
from .mining import distribute_rewards, miner_decision, trigger_check, trigger_sample
from .orderbook import NEVER, OrderBook, Side, book_class
from .population import (
    POPULATIONS,
    EntrantSchedule,
    Population,
    Traders,
    assign_populations,
    generate_entrant_pool,
    generate_initial_traders,
    pool_size,
    setup_trader,
)

log = logging.getLogger(__name__)

SCENARIOS = ("base", "gox")
POP_NAMES = {p: p.name.lower() for p in POPULATIONS}


@dataclass(frozen=True)
class SimConfig:
    calibration: CalibrationSet = field(default_factory=CalibrationSet)
    scenario: str = "base"
    record_trades: bool = False
    audit: bool = True
    backend: str | None = None

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario: must be one of {SCENARIOS}, got {self.scenario!r}")
        self.calibration.validate()


@dataclass
class DailyRecord:
    step: int
    close: float
    volume: float
    turnover: float
    trade_count: int
    network_hash: float
    total_power: float
    electricity_spend: float
    electricity_shortfall: float
    hardware_spend: float
    mined_btc: float
    total_btc: float
    total_cash: float
    entrants: int
    open_orders: int
    n_miner: int
    n_random: int
    n_chartist: int
    n_gox: int
    cash_miner: float
    cash_random: float
    cash_chartist: float
    cash_gox: float
    btc_miner: float
    btc_random: float
    btc_chartist: float
    btc_gox: float
    wealth_miner: float
    wealth_random: float
    wealth_chartist: float
    wealth_gox: float


RECORD_FIELDS = tuple(f.name for f in dataclasses.fields(DailyRecord))
INT_FIELDS = frozenset(f.name for f in dataclasses.fields(DailyRecord) if f.type in ("int", int))


@dataclass
class RunResult:
    seed: int
    config: SimConfig
    records: list[DailyRecord]
    traders: Traders
    trades: list[tuple] = field(default_factory=list)
    initial_wealth: np.ndarray | None = None
    initial_ids: np.ndarray | None = None
    btc_error: np.ndarray | None = None
    cash_error: np.ndarray | None = None
    reserve_error: np.ndarray | None = None

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def columns(self) -> dict[str, np.ndarray]:
        return {name: self.series(name) for name in RECORD_FIELDS}

    @property
    def close(self) -> np.ndarray:
        return self.series("close")


def _rel(err: float, scale: float) -> float:
    return abs(err) / max(abs(scale), 1.0)


class Simulation:
    """One seeded run.  Call :meth:`step` repeatedly or :meth:`run` once."""

    def __init__(self, config: SimConfig, seed: int):
        config.validate()
        self.config = config
        self.seed = seed
        c = self.calib = config.calibration
        self.rng = np.random.default_rng(seed)
        self.pool = generate_entrant_pool(c, pool_size(c), self.rng)
        self.traders = Traders(c.N0 + len(self.pool))
        generate_initial_traders(c, self.rng, self.traders)
        tr = self.traders
        self.initial_ids = np.arange(tr.n)
        self.initial_wealth = tr.cash[: tr.n] + tr.btc[: tr.n] * c.p0
        cls = OrderBook if config.backend is None else book_class(config.backend)
        self.book = cls(c.p0, tr.cash, tr.btc, tr.reserved_cash, tr.reserved_btc,
                        record_trades=config.record_trades)
        self.history = PriceHistory(c.p0, c.horizon)
        self.schedule = EntrantSchedule(c)
        self.t = 0
        self.next_order_id = 0
        self.records: list[DailyRecord] = []
        # endowments are scaled to BT0, so audit against the anchor itself
        self.btc_anchor = c.BT0
        self.mined = 0.0
        self.total_cash = float(tr.cash[: tr.n].sum())
        self.btc_error: list[float] = []
        self.cash_error: list[float] = []
        self.reserve_error: list[float] = []

    # ---- helpers --------------------------------------------------------

    def _submit(self, draws: OrderDraws) -> None:
        """Insert orders one by one, each sized and priced at the live price."""
        if not len(draws):
            return
        self.next_order_id += self.book.submit_quoted(
            self.next_order_id, draws.trader, draws.side, draws.beta, draws.market, draws.noise,
            draws.expiry, self.t, agents.MIN_AMOUNT)

    def _miner_sell(self, i: int, amount: float) -> None:
        if amount > agents.MIN_AMOUNT:
            self.book.submit(self.next_order_id, i, int(Side.SELL), amount, 0.0, 0.0, self.t, NEVER)
            self.next_order_id += 1

    def _decide(self, i: int, net: float) -> tuple[float, float]:
        dec = miner_decision(self.traders, i, self.book.last_price, net, self.t, self.rng, self.calib)
        self._miner_sell(i, dec.sell_amount)
        return dec.hash_delta, dec.hardware_spend

    def _active(self, pop: Population, p: float) -> np.ndarray:
        idx = self.traders.members(pop)
        if not idx.shape[0]:
            return idx
        draw = self.rng.random(idx.shape[0]) < p
        return idx[draw & (self.traders.entry_step[idx] < self.t)]

    # ---- the day --------------------------------------------------------

    def step(self) -> DailyRecord:
        c, tr, book, hist, rng = self.calib, self.traders, self.book, self.history, self.rng
        self.t = t = self.t + 1
        book.reset_day()
        hist.current = book.last_price
        sigma = adaptive_sigma(hist.closes, c.K, c.sigma_window, c.sigma_lo, c.sigma_hi)
        miners = tr.members(Population.MINER)
        net = float(tr.hash[miners].sum())
        cash_start = self.total_cash

        # 1. entrants
        k = self.schedule.count(t) if t >= 2 else 0
        injected = 0.0
        if k:
            cash = self.pool.take(k)
            pops = assign_populations(t, k, self.config.scenario, rng, c)
            first = tr.n
            for j in range(k):
                i = tr.add(Population(int(pops[j])), float(cash[j]), 0.0, t)
                if pops[j] == Population.MINER:
                    tr.next_decision[i] = t
                else:
                    setup_trader(tr, i, t, rng, c)
            injected = float(cash.sum())
            new = np.arange(first, tr.n)
            new = new[tr.population[new] != Population.MINER]
            if new.shape[0]:
                self._submit(agents.entry_orders(tr, new, hist, sigma, t, rng, c))
            miners = tr.members(Population.MINER)

        # 2. miners
        hardware = 0.0
        due = miners[tr.next_decision[miners] <= t]
        for i in due:
            dh, spend = self._decide(int(i), net)
            net += dh
            hardware += spend
        hist.current = book.last_price
        if trigger_check(hist, t, c):
            rest = np.setdiff1d(miners, due, assume_unique=True)
            for i in trigger_sample(rest, rng, c):
                dh, spend = self._decide(int(i), net)
                net += dh
                hardware += spend

        # 3-4. active traders
        rand = self._active(Population.RANDOM, c.p_active_random)
        chart = self._active(Population.CHARTIST, c.p_active_chartist)
        gox = self._active(Population.GOX, c.gox_p_active) if self.config.scenario == "gox" else rand[:0]
        hist.current = book.last_price
        draws = OrderDraws.concat([
            agents.random_orders(rand, sigma, t, rng, c),
            agents.chartist_orders(tr, chart, hist, sigma, t, rng, c),
            agents.gox_orders(gox, sigma, t, rng, c),
        ])
        if len(draws):
            self._submit(draws.take(rng.permutation(len(draws))))

        # 5. expiry
        book.expire(t, collect=False)

        # 6. rewards
        total_hash = float(tr.hash[miners].sum())
        reward = block_reward_per_day(t, c) if total_hash > 0.0 else 0.0
        distribute_rewards(tr, t, c, total_hash)
        self.mined += reward

        # 7. electricity
        bill = tr.elec_cost[miners]
        free = np.maximum(tr.cash[miners] - tr.reserved_cash[miners], 0.0)
        paid = np.minimum(bill, free)
        tr.cash[miners] -= paid
        electricity = float(paid.sum())
        shortfall = float(bill.sum()) - electricity

        self.total_cash = cash_start + injected - hardware - electricity
        rec = self._record(t, k, total_hash, electricity, shortfall, hardware, reward)
        hist.record_close(rec.close)
        self.records.append(rec)
        if self.config.audit:
            self._audit(rec)
        return rec

    def _record(self, t, entrants, total_hash, electricity, shortfall, hardware, reward) -> DailyRecord:
        tr, book = self.traders, self.book
        n = tr.n
        pops = tr.population[:n]
        close = book.last_price
        counts = np.bincount(pops, minlength=4)
        cash = np.bincount(pops, weights=tr.cash[:n], minlength=4)
        btc = np.bincount(pops, weights=tr.btc[:n], minlength=4)
        miners = tr.members(Population.MINER)
        vals = dict(
            step=t, close=close, volume=book.day_volume, turnover=book.day_turnover,
            trade_count=int(book.day_trades), network_hash=total_hash,
            total_power=float(tr.power[miners].sum()), electricity_spend=electricity,
            electricity_shortfall=shortfall, hardware_spend=hardware, mined_btc=reward,
            total_btc=float(btc.sum()), total_cash=float(cash.sum()), entrants=entrants,
            open_orders=len(book),
        )
        for p in POPULATIONS:
            name = POP_NAMES[p]
            vals[f"n_{name}"] = int(counts[p])
            vals[f"cash_{name}"] = float(cash[p])
            vals[f"btc_{name}"] = float(btc[p])
            vals[f"wealth_{name}"] = float(cash[p] + btc[p] * close)
        return DailyRecord(**vals)

    def _audit(self, rec: DailyRecord) -> None:
        expected_btc = self.btc_anchor + self.mined
        self.btc_error.append(_rel(rec.total_btc - expected_btc, expected_btc))
        self.cash_error.append(_rel(rec.total_cash - self.total_cash, self.total_cash))
        open_cash, open_btc = self.book.open_totals()
        n = self.traders.n
        rc = float(self.traders.reserved_cash[:n].sum())
        rb = float(self.traders.reserved_btc[:n].sum())
        self.reserve_error.append(max(_rel(rc - open_cash, open_cash), _rel(rb - open_btc, open_btc)))

    def run(self) -> RunResult:
        while self.t < self.calib.horizon:
            self.step()
        return self.result()

    def result(self) -> RunResult:
        return RunResult(
            seed=self.seed, config=self.config, records=self.records, traders=self.traders,
            trades=self.book.trade_log() if self.config.record_trades else [],
            initial_wealth=self.initial_wealth, initial_ids=self.initial_ids,
            btc_error=np.array(self.btc_error), cash_error=np.array(self.cash_error),
            reserve_error=np.array(self.reserve_error),
        )


def run(config: SimConfig, seed: int) -> RunResult:
    """Simulate steps 1..horizon for one seed; same (config, seed) gives the same output."""
    return Simulation(config, seed).run()


# ---- ensembles ----------------------------------------------------------

@dataclass
class Ensemble:
    seeds: list[int]
    mean: dict[str, np.ndarray]
    std: dict[str, np.ndarray]
    runs: list[RunResult]

    @property
    def steps(self) -> np.ndarray:
        return self.mean["step"]


def summarize(runs: list[RunResult]) -> Ensemble:
    """Per-step mean and population std of every record field across runs."""
    runs = sorted(runs, key=lambda r: r.seed)
    cols = [r.columns() for r in runs]
    mean, std = {}, {}
    for name in RECORD_FIELDS:
        stack = np.vstack([c[name].astype(float) for c in cols])
        mean[name] = stack.mean(axis=0)
        std[name] = stack.std(axis=0)
    return Ensemble([r.seed for r in runs], mean, std, runs)


def _run_job(args):
    config, seed = args
    return run(config, seed)


def monte_carlo(config: SimConfig, seeds, workers: int = 1) -> Ensemble:
    seeds = list(seeds)
    if not seeds:
        raise ValueError("monte_carlo needs at least one seed")
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(_run_job, [(config, s) for s in seeds]))
    else:
        runs = []
        for s in seeds:
            log.info("run seed=%s scenario=%s", s, config.scenario)
            runs.append(run(config, s))
    return summarize(runs)
