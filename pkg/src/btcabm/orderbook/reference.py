"""Brute-force matcher used as a test oracle.

Keeps plain lists, re-sorts both sides from scratch and rescans from the
head after every event.  Slow by design; shares no code with the cores.
"""
from __future__ import annotations


from . import Order, Side, Trade


def _price(bl, sl, current):
    if bl > 0.0 and sl > 0.0:
        return (bl + sl) / 2.0
    if bl > 0.0:
        return min(bl, current)
    if sl > 0.0:
        return max(sl, current)
    return current


def _buy_rank(o):
    # descending limit; a market buy (limit 0) ranks last
    return (-o["limit"], o["seq"])


def _sell_rank(o):
    return (o["limit"], o["seq"])


class NaiveBook:
    def __init__(self, last_price: float):
        self.last_price = last_price
        self.orders: list[dict] = []
        self.trades: list[Trade] = []
        self._seq = 0

    def insert(self, order: Order) -> list[Trade]:
        if not order.residual_amount > 0:
            raise ValueError("order amount must be > 0")
        self.orders.append(dict(
            id=order.id, trader=order.trader_id, side=order.side,
            res=float(order.residual_amount), limit=float(order.limit_price),
            budget=float(order.budget) if order.side == Side.BUY else 0.0,
            step=order.issue_step, expiry=order.expiry_step, seq=self._seq,
        ))
        self._seq += 1
        start = len(self.trades)
        while True:
            buys = sorted((o for o in self.orders if o["side"] == Side.BUY), key=_buy_rank)
            sells = sorted((o for o in self.orders if o["side"] == Side.SELL), key=_sell_rank)
            if not buys or not sells:
                break
            b, s = buys[0], sells[0]
            if b["limit"] > 0.0 and s["limit"] > 0.0 and s["limit"] > b["limit"]:
                break
            price = _price(b["limit"], s["limit"], self.last_price)
            q = min(b["res"], s["res"])
            exhausted = False
            if b["limit"] > 0.0:
                spent = q * b["limit"]
            else:
                value = q * price
                if value > b["budget"]:
                    value = b["budget"]
                    q = value / price
                    exhausted = True
                spent = value
            if not q > 0.0:
                self.orders.remove(b)
                continue
            b["budget"] -= spent
            b["res"] -= q
            s["res"] -= q
            self.last_price = price
            self.trades.append(Trade(b["id"], s["id"], price, q, order.issue_step, b["trader"], s["trader"]))
            if s["res"] <= 0.0:
                self.orders.remove(s)
            if exhausted or b["res"] <= 0.0:
                self.orders.remove(b)
        return self.trades[start:]

    def expire(self, t: int) -> list[int]:
        gone = [o["id"] for o in self.orders if o["expiry"] <= t]
        self.orders = [o for o in self.orders if o["expiry"] > t]
        return gone
