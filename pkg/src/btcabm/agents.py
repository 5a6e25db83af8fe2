"""Order generation for Random traders, Chartists and Gox accounts.

Everything is vectorised over a set of trader ids; the single-trader
functions wrap the batch ones so there is one code path.  Random draws
happen in a fixed order (side, beta, market flag, limit noise, expiry)
which is part of the run's determinism contract.  Amounts and limits are
not fixed here: they depend on the price at the moment each order enters
the book (see ``OrderDraws``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import CalibrationSet, lognormal_params
from .orderbook import NEVER, Order, Side
from .population import Population, Traders

BUY = int(Side.BUY)
SELL = int(Side.SELL)
# orders smaller than this (BTC) are float residue, not intent
MIN_AMOUNT = 1e-12
LIMIT_DRAW_FLOOR = 0.5


class PriceHistory:
    """Daily closes plus the latest intra-day trade price.

    ``closes[0]`` is the opening price p(0); ``closes[t]`` the close of
    step ``t``.
    """

    def __init__(self, p0: float, horizon: int = 0):
        self._closes = np.empty(max(horizon, 0) + 2)
        self._closes[0] = p0
        self._n = 1
        self.current = p0

    def record_close(self, price: float) -> None:
        if self._n == self._closes.shape[0]:
            self._closes = np.concatenate([self._closes, np.empty(self._n)])
        self._closes[self._n] = price
        self._n += 1

    @property
    def closes(self) -> np.ndarray:
        return self._closes[: self._n]

    def close(self, step: int) -> float:
        return float(self._closes[min(max(step, 0), self._n - 1)])

    def variation(self, t, tau):
        """Relative change of the current price against the close ``tau`` steps back.

        ``tau`` may be an array (one window per trader).
        """
        lag = np.clip(np.asarray(t) - np.asarray(tau), 0, self._n - 1)
        past = self._closes[lag]
        return (self.current - past) / past

    def __len__(self) -> int:
        return self._n


@dataclass
class OrderBatch:
    trader: np.ndarray
    side: np.ndarray
    amount: np.ndarray
    limit: np.ndarray
    budget: np.ndarray
    expiry: np.ndarray

    @classmethod
    def empty(cls) -> OrderBatch:
        return cls(np.empty(0, np.int64), np.empty(0, np.int8), np.empty(0), np.empty(0),
                   np.empty(0), np.empty(0, np.int64))

    def __len__(self) -> int:
        return self.trader.shape[0]

    def take(self, sel) -> OrderBatch:
        return OrderBatch(self.trader[sel], self.side[sel], self.amount[sel], self.limit[sel],
                          self.budget[sel], self.expiry[sel])

    @classmethod
    def concat(cls, batches) -> OrderBatch:
        batches = [b for b in batches if len(b)]
        if not batches:
            return cls.empty()
        return cls(*(np.concatenate([getattr(b, f) for b in batches])
                     for f in ("trader", "side", "amount", "limit", "budget", "expiry")))

    def orders(self, first_id: int = -1, step: int = 0) -> list[Order]:
        return [
            Order(first_id + k if first_id >= 0 else -1, int(self.trader[k]), Side(int(self.side[k])),
                  float(self.amount[k]), float(self.limit[k]), step, int(self.expiry[k]),
                  float(self.budget[k]) if self.side[k] == BUY else 0.0)
            for k in range(len(self))
        ]


# ---- primitives -------------------------------------------------------

def lognormal(rng: np.random.Generator, mean: float, sd: float, size=None):
    """Lognormal draw parameterised by its own mean and standard deviation."""
    mu, sigma = lognormal_params(mean, sd)
    return rng.lognormal(mu, sigma, size)


def draw_fraction(rng, mean, sd, size=None):
    """Lognormal fraction clamped to at most 1."""
    return np.minimum(lognormal(rng, mean, sd, size), 1.0)


def order_amount_buy(available_cash, beta_mean, beta_sd, price, rng):
    """Bitcoins to buy: ``available_cash * beta / price``."""
    beta = draw_fraction(rng, beta_mean, beta_sd, np.shape(available_cash) or None)
    return np.asarray(available_cash) * beta / price


def order_amount_sell(available_btc, beta_mean, beta_sd, rng):
    beta = draw_fraction(rng, beta_mean, beta_sd, np.shape(available_btc) or None)
    return np.asarray(available_btc) * beta


def adaptive_sigma(closes, K: float, window: int, sigma_lo: float, sigma_hi: float) -> float:
    """``K`` times the std of absolute returns over the last ``window`` steps, clamped."""
    closes = np.asarray(closes, dtype=float)
    if closes.shape[0] < 3:
        return sigma_lo
    tail = closes[-(window + 1):]
    r = np.abs(tail[1:] / tail[:-1] - 1.0)
    if r.shape[0] < 2:
        return sigma_lo
    return float(min(max(K * r.std(), sigma_lo), sigma_hi))


def limit_price(side, current, mu, sigma_i, rng, size=None):
    """Buy limit ``current * N(mu, sigma)``; sell limit ``current / N(mu, sigma)``."""
    draw = np.maximum(rng.normal(mu, sigma_i, size), LIMIT_DRAW_FLOOR)
    return np.where(np.asarray(side) == BUY, current * draw, current / draw)


def _expiry_random(rng, t, k, calib):
    days = np.floor(lognormal(rng, calib.expiry_random_mean, calib.expiry_random_sd, k) + 0.5)
    return t + np.maximum(days, 1).astype(np.int64)


@dataclass
class OrderDraws:
    """Random inputs of a set of orders, drawn before any of them is priced.

    Sizing and limits depend on the price when each order enters the book,
    so the engine hands these to the book's ``submit_quoted`` kernel;
    :meth:`quote` applies the same rules at one fixed price.
    """

    trader: np.ndarray
    side: np.ndarray
    beta: np.ndarray
    market: np.ndarray
    noise: np.ndarray
    expiry: np.ndarray

    FIELDS = ("trader", "side", "beta", "market", "noise", "expiry")

    @classmethod
    def empty(cls) -> OrderDraws:
        return cls(np.empty(0, np.int64), np.empty(0, np.int8), np.empty(0),
                   np.empty(0, bool), np.empty(0), np.empty(0, np.int64))

    def __len__(self) -> int:
        return self.trader.shape[0]

    def take(self, sel) -> OrderDraws:
        return OrderDraws(*(getattr(self, f)[sel] for f in self.FIELDS))

    @classmethod
    def concat(cls, parts) -> OrderDraws:
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls.empty()
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in cls.FIELDS))

    def quote(self, traders: Traders, price: float) -> OrderBatch:
        """Concrete orders at ``price``; drops those at or below ``MIN_AMOUNT``."""
        is_buy = self.side == BUY
        cash = np.maximum(traders.cash[self.trader] - traders.reserved_cash[self.trader], 0.0)
        btc = np.maximum(traders.btc[self.trader] - traders.reserved_btc[self.trader], 0.0)
        limit = np.where(self.market, 0.0,
                         np.where(is_buy, price * self.noise, price / self.noise))
        amount = np.where(is_buy, cash * self.beta / price, btc * self.beta)
        # a limit buy escrows amount * limit; keep it within the free cash
        escrow = np.where(self.market, price, limit)
        over = is_buy & (amount * escrow > cash)
        amount = np.where(over, cash / escrow, amount)
        budget = np.where(is_buy, np.where(over, cash, amount * escrow), 0.0)
        batch = OrderBatch(self.trader.astype(np.int64), self.side.astype(np.int8), amount, limit,
                           budget, self.expiry.astype(np.int64))
        keep = amount > MIN_AMOUNT
        return batch if keep.all() else batch.take(keep)


def _draw(idx: np.ndarray, side: np.ndarray, sigma: float, beta_mean: float, beta_sd: float,
          p_market: float, rng: np.random.Generator, calib: CalibrationSet) -> OrderDraws:
    """Draw beta, market flag and limit noise (in that order) for traders ``idx``."""
    k = idx.shape[0]
    beta = draw_fraction(rng, beta_mean, beta_sd, k)
    market = rng.random(k) < p_market
    noise = np.maximum(rng.normal(calib.mu_limit, sigma, k), LIMIT_DRAW_FLOOR)
    return OrderDraws(idx.astype(np.int64), side.astype(np.int8), beta, market, noise,
                      np.zeros(k, dtype=np.int64))


# ---- population behaviours -------------------------------------------

def random_orders(idx: np.ndarray, sigma: float, t: int, rng: np.random.Generator,
                  calib: CalibrationSet, force_side: int | None = None) -> OrderDraws:
    """Orders of active Random traders: fair-coin side, random-trader sizing."""
    k = idx.shape[0]
    u = rng.random(k)
    side = np.where(u < 0.5, BUY, SELL).astype(np.int8)
    if force_side is not None:
        side[:] = force_side
    draws = _draw(idx, side, sigma, calib.beta_random_mean, calib.beta_random_sd,
                  calib.P_lim_random, rng, calib)
    draws.expiry = _expiry_random(rng, t, k, calib)
    return draws


def chartist_sides(v: np.ndarray, contrarian: np.ndarray, threshold: float) -> np.ndarray:
    """+BUY/SELL per chartist, or -1 for no order (|v| <= threshold)."""
    side = np.where(v > threshold, BUY, np.where(v < -threshold, SELL, -1))
    flip = contrarian & (side >= 0)
    side[flip] = 1 - side[flip]
    return side.astype(np.int8)


def chartist_orders(traders: Traders, idx: np.ndarray, history: PriceHistory, sigma: float,
                    t: int, rng: np.random.Generator, calib: CalibrationSet,
                    force_buy: bool = False) -> OrderDraws:
    """Trend-following orders; expire at the end of the current day.

    The side is fixed from ``history.current`` when the chartist is
    activated.
    """
    if force_buy:
        side = np.full(idx.shape[0], BUY, dtype=np.int8)
    else:
        v = history.variation(t, traders.tau_c[idx])
        side = chartist_sides(v, traders.contrarian[idx], calib.Th_C)
        acting = side >= 0
        idx, side = idx[acting], side[acting]
    draws = _draw(idx, side, sigma, calib.beta_chartist_mean, calib.beta_chartist_sd,
                  calib.P_lim_chartist, rng, calib)
    draws.expiry[:] = t
    return draws


def gox_phase_side(t: int, calib: CalibrationSet) -> int | None:
    """Forced side for Gox accounts at ``t``; ``None`` while they act like Random traders."""
    if t < calib.gox_buy_start:
        return None
    return BUY if t < calib.gox_sell_start else SELL


def gox_orders(idx: np.ndarray, sigma: float, t: int, rng: np.random.Generator,
               calib: CalibrationSet, force_buy: bool = False) -> OrderDraws:
    side = BUY if force_buy else gox_phase_side(t, calib)
    return random_orders(idx, sigma, t, rng, calib, force_side=side)


def entry_orders(traders: Traders, idx: np.ndarray, history: PriceHistory, sigma: float, t: int,
                 rng: np.random.Generator, calib: CalibrationSet) -> OrderDraws:
    """First buy orders of newly admitted non-miners, grouped by population."""
    pops = traders.population[idx]
    parts = []
    for pop in (Population.RANDOM, Population.CHARTIST, Population.GOX):
        sub = idx[pops == pop]
        if not sub.shape[0]:
            continue
        if pop == Population.CHARTIST:
            parts.append(chartist_orders(traders, sub, history, sigma, t, rng, calib, force_buy=True))
        else:
            parts.append(random_orders(sub, sigma, t, rng, calib, force_side=BUY))
    return OrderDraws.concat(parts)


# ---- single-trader wrappers ------------------------------------------

def _one(draws: OrderDraws, traders: Traders, price: float, t: int) -> Order | None:
    batch = draws.quote(traders, price)
    return batch.orders(step=t)[0] if len(batch) else None


def _sigma(history: PriceHistory, calib: CalibrationSet) -> float:
    return adaptive_sigma(history.closes, calib.K, calib.sigma_window, calib.sigma_lo, calib.sigma_hi)


def random_trader_action(traders: Traders, i: int, history: PriceHistory, t: int,
                         rng: np.random.Generator, calib: CalibrationSet) -> Order | None:
    draws = random_orders(np.array([i]), _sigma(history, calib), t, rng, calib)
    return _one(draws, traders, history.current, t)


def chartist_action(traders: Traders, i: int, history: PriceHistory, t: int,
                    rng: np.random.Generator, calib: CalibrationSet) -> Order | None:
    draws = chartist_orders(traders, np.array([i]), history, _sigma(history, calib), t, rng, calib)
    return _one(draws, traders, history.current, t)


def gox_action(traders: Traders, i: int, history: PriceHistory, t: int,
               rng: np.random.Generator, calib: CalibrationSet) -> Order | None:
    draws = gox_orders(np.array([i]), _sigma(history, calib), t, rng, calib)
    return _one(draws, traders, history.current, t)


__all__ = [
    "NEVER", "MIN_AMOUNT", "OrderBatch", "OrderDraws", "PriceHistory", "adaptive_sigma", "chartist_action",
    "chartist_orders", "chartist_sides", "draw_fraction", "entry_orders", "gox_action",
    "gox_orders", "gox_phase_side", "limit_price", "lognormal", "order_amount_buy",
    "order_amount_sell", "random_orders", "random_trader_action",
]
