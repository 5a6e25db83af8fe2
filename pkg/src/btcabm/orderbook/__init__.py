"""Continuous double auction with the price-formation rules of the model.

The matching core comes in two interchangeable backends: a compiled
Cython extension (``_cbook``) and a pure-Python twin (``_pybook``).  The
compiled one is used when it imports; set ``BTCABM_PURE_PYTHON=1`` to
force the fallback.  Both produce bit-identical results.

Buy orders carry a cash ``budget`` escrowed from the buyer when the order
is placed.  Limit buys escrow ``amount * limit``; market buys escrow
``amount * price_at_issue`` and are cut short if a fill would exceed what
is left of it.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from enum import IntEnum

from . import _pybook

BACKENDS = {"python": _pybook}
try:
    from . import _cbook
except ImportError:  # extension not built
    _cbook = None
else:
    BACKENDS["cython"] = _cbook

if _cbook is not None and not os.environ.get("BTCABM_PURE_PYTHON"):
    _core = _cbook
else:
    _core = _pybook

BACKEND = "cython" if _core is _cbook else "python"
NEVER = _pybook.NEVER
transaction_price = _core.transaction_price


class Side(IntEnum):
    BUY = 0
    SELL = 1


@dataclass(frozen=True)
class Order:
    id: int
    trader_id: int
    side: Side
    residual_amount: float
    limit_price: float = 0.0
    issue_step: int = 0
    expiry_step: int = NEVER
    budget: float = math.inf
    issue_seq: int = -1

    @property
    def is_market(self) -> bool:
        return self.limit_price == 0.0

    @classmethod
    def _from_core(cls, row) -> Order:
        oid, trader, side, residual, limit, budget, step, expiry, seq = row
        return cls(oid, trader, Side(side), residual, limit, step, expiry, budget, seq)


@dataclass(frozen=True)
class Trade:
    buy_order_id: int
    sell_order_id: int
    price: float
    quantity: float
    step: int
    buyer: int = -1
    seller: int = -1

    @classmethod
    def _from_log(cls, row) -> Trade:
        step, bid, sid, price, q, buyer, seller = row
        return cls(bid, sid, price, q, step, buyer, seller)


def book_class(backend: str | None = None):
    """Return an ``OrderBook`` class bound to the named backend core."""
    mod = _core if backend is None else BACKENDS[backend]
    return _BOOKS[mod.__name__]


def _make_book(core_mod):
    class OrderBook(core_mod.BookCore):
        """Order book; ``insert``/``expire`` return value objects.

        Pass the four account arrays (indexed by trader id) to have fills
        settled and escrow tracked in place; omit them for pure matching.
        """

        def insert(self, order: Order) -> list[Trade]:
            start = self.n_logged
            self.submit(order.id, order.trader_id, int(order.side), order.residual_amount,
                        order.limit_price, order.budget, order.issue_step, order.expiry_step)
            return [Trade._from_log(r) for r in self.trade_log(start)]

        def expire(self, t, collect=True):
            out = super().expire(t, collect)
            return [Order._from_core(r) for r in out] if collect else out

        def buy_orders(self) -> list[Order]:
            return [Order._from_core(r) for r in self.snapshot(Side.BUY)]

        def sell_orders(self) -> list[Order]:
            return [Order._from_core(r) for r in self.snapshot(Side.SELL)]

        def best_bid(self) -> Order | None:
            rows = self.snapshot(Side.BUY)
            return Order._from_core(rows[0]) if rows else None

        def best_ask(self) -> Order | None:
            rows = self.snapshot(Side.SELL)
            return Order._from_core(rows[0]) if rows else None

        def trades(self, start: int = 0) -> list[Trade]:
            return [Trade._from_log(r) for r in self.trade_log(start)]

    OrderBook.__qualname__ = OrderBook.__name__ = f"OrderBook[{core_mod.BookCore.backend}]"
    return OrderBook


_BOOKS = {mod.__name__: _make_book(mod) for mod in BACKENDS.values()}
OrderBook = book_class()


def crosses(buy_limit: float, sell_limit: float) -> bool:
    """Whether a buy and a sell at these limits may trade."""
    return buy_limit == 0.0 or sell_limit == 0.0 or sell_limit <= buy_limit


__all__ = [
    "BACKEND", "BACKENDS", "NEVER", "Order", "OrderBook", "Side", "Trade",
    "book_class", "crosses", "transaction_price",
]
