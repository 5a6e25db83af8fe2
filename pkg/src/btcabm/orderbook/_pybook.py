"""Pure-Python order book core.

Mirrors ``_cbook.pyx`` operation for operation (same float expression
order) so both backends produce bit-identical trades and balances.
"""
from __future__ import annotations

import heapq

import numpy as np

BUY = 0
SELL = 1
NEVER = 2**62


def transaction_price(buy_limit, sell_limit, current):
    if buy_limit > 0.0 and sell_limit > 0.0:
        return (buy_limit + sell_limit) / 2.0
    if buy_limit > 0.0:
        return min(buy_limit, current)
    if sell_limit > 0.0:
        return max(sell_limit, current)
    return current


class BookCore:
    backend = "python"

    def __init__(self, last_price, cash=None, btc=None, reserved_cash=None,
                 reserved_btc=None, record_trades=True):
        if not last_price > 0:
            raise ValueError("last_price must be > 0")
        self.last_price = float(last_price)
        self._settle = cash is not None
        if self._settle:
            self._cash, self._btc = cash, btc
            self._rcash, self._rbtc = reserved_cash, reserved_btc
        self.record_trades = record_trades
        # id -> [trader, side, residual, limit, budget, step, expiry, seq]
        self._orders = {}
        self._buys = []
        self._sells = []
        self._seq = 0
        self._step = 0
        self._log = []
        self.day_volume = 0.0
        self.day_turnover = 0.0
        self.day_trades = 0
        self.total_trades = 0

    # ---- submission ---------------------------------------------------

    def submit(self, order_id, trader, side, amount, limit, budget, step, expiry):
        if not amount > 0.0:
            raise ValueError(f"order amount must be > 0, got {amount}")
        if not limit >= 0.0:
            raise ValueError(f"limit price must be >= 0, got {limit}")
        if side == BUY and not budget >= 0.0:
            raise ValueError("buy budget must be >= 0")
        self._step = step
        seq = self._seq
        self._seq += 1
        amount = float(amount)
        limit = float(limit)
        budget = float(budget) if side == BUY else 0.0
        self._orders[order_id] = [trader, side, amount, limit, budget, step, expiry, seq]
        if self._settle:
            if side == BUY:
                self._rcash[trader] += budget
            else:
                self._rbtc[trader] += amount
        if side == BUY:
            key = -limit
            heapq.heappush(self._buys, (key, seq, order_id))
        else:
            heapq.heappush(self._sells, (limit, seq, order_id))
        return self._match()

    def submit_batch(self, first_id, traders, sides, amounts, limits, budgets, expiries, step):
        n = 0
        for k in range(len(traders)):
            n += self.submit(first_id + k, int(traders[k]), int(sides[k]), float(amounts[k]),
                             float(limits[k]), float(budgets[k]), step, int(expiries[k]))
        return n

    def submit_quoted(self, first_id, traders, sides, betas, markets, noises, expiries, step,
                      min_amount):
        """Price and submit pre-drawn orders one by one against the live price.

        Each order is sized from its trader's unreserved balance and the
        last trade price at the moment it enters; buys are ``cash*beta/p``
        (cut so escrow fits the free cash), sells ``btc*beta``.  Limits are
        ``p*noise`` (buy) or ``p/noise`` (sell), zero for market orders.
        Orders at or below ``min_amount`` are dropped without using an id.
        Returns the number of ids used.
        """
        if not self._settle:
            raise ValueError("submit_quoted needs account arrays")
        oid = first_id
        for k in range(len(traders)):
            i = int(traders[k])
            side = int(sides[k])
            beta = float(betas[k])
            market = bool(markets[k])
            p = self.last_price
            budget = 0.0
            if side == BUY:
                free = float(self._cash[i]) - float(self._rcash[i])
                if free < 0.0:
                    free = 0.0
                amount = free * beta / p
                if market:
                    limit = 0.0
                    escrow = p
                else:
                    limit = p * float(noises[k])
                    escrow = limit
                if amount * escrow > free:
                    amount = free / escrow
                    budget = free
                else:
                    budget = amount * escrow
            else:
                free = float(self._btc[i]) - float(self._rbtc[i])
                if free < 0.0:
                    free = 0.0
                amount = free * beta
                limit = 0.0 if market else p / float(noises[k])
            if amount > min_amount:
                self.submit(oid, i, side, amount, limit, budget, step, int(expiries[k]))
                oid += 1
        return oid - first_id

    # ---- matching -----------------------------------------------------

    def _top(self, heap):
        orders = self._orders
        while heap:
            oid = heap[0][2]
            if oid in orders:
                return oid
            heapq.heappop(heap)
        return -1

    def _remove(self, oid):
        o = self._orders.pop(oid)
        if self._settle:
            if o[1] == BUY:
                self._rcash[o[0]] -= o[4]
            else:
                self._rbtc[o[0]] -= o[2]
        return o

    def _match(self):
        n = 0
        orders = self._orders
        while True:
            bid = self._top(self._buys)
            if bid < 0:
                break
            sid = self._top(self._sells)
            if sid < 0:
                break
            b = orders[bid]
            s = orders[sid]
            bl = b[3]
            sl = s[3]
            if bl > 0.0 and sl > 0.0 and sl > bl:
                break
            price = transaction_price(bl, sl, self.last_price)
            q = min(b[2], s[2])
            buy_done = False
            if bl > 0.0:
                value = q * price
                spent = q * bl
            else:
                value = q * price
                if value > b[4]:
                    value = b[4]
                    q = value / price
                    buy_done = True
                spent = value
            if not q > 0.0:
                self._remove(bid)
                continue
            if self._settle:
                bt = b[0]
                st = s[0]
                self._cash[bt] -= value
                self._btc[bt] += q
                self._rcash[bt] -= spent
                self._cash[st] += value
                self._btc[st] -= q
                self._rbtc[st] -= q
            b[4] -= spent
            b[2] -= q
            s[2] -= q
            self.last_price = price
            n += 1
            self.day_trades += 1
            self.total_trades += 1
            self.day_volume += q
            self.day_turnover += value
            if self.record_trades:
                self._log.append((self._step, bid, sid, price, q, b[0], s[0]))
            if s[2] <= 0.0:
                self._remove(sid)
            if buy_done or b[2] <= 0.0:
                self._remove(bid)
        return n

    # ---- expiry and inspection ---------------------------------------

    def expire(self, t, collect=True):
        dead = sorted((o[7], oid) for oid, o in self._orders.items() if o[6] <= t)
        out = []
        for _, oid in dead:
            o = self._remove(oid)
            if collect:
                out.append((oid, o[0], o[1], o[2], o[3], o[4], o[5], o[6], o[7]))
        if dead:
            self._rebuild()
        return out if collect else len(dead)

    def _rebuild(self):
        orders = self._orders
        self._buys = [e for e in self._buys if e[2] in orders]
        self._sells = [e for e in self._sells if e[2] in orders]
        heapq.heapify(self._buys)
        heapq.heapify(self._sells)

    def snapshot(self, side):
        """Resting orders of one side in queue-priority order, as tuples."""
        heap = self._buys if side == BUY else self._sells
        live = sorted(e for e in heap if e[2] in self._orders)
        out = []
        for _, _, oid in live:
            o = self._orders[oid]
            out.append((oid, o[0], o[1], o[2], o[3], o[4], o[5], o[6], o[7]))
        return out

    def __len__(self):
        return len(self._orders)

    def reset_day(self):
        self.day_volume = 0.0
        self.day_turnover = 0.0
        self.day_trades = 0

    def trade_log(self, start=0):
        return self._log[start:]

    def clear_trade_log(self):
        self._log = []

    @property
    def n_logged(self):
        return len(self._log)

    def open_totals(self):
        """(sum of buy budgets, sum of sell residuals) over resting orders."""
        cash = 0.0
        btc = 0.0
        for o in self._orders.values():
            if o[1] == BUY:
                cash += o[4]
            else:
                btc += o[2]
        return cash, btc

    def open_by_trader(self, n):
        cash = np.zeros(n)
        btc = np.zeros(n)
        for o in self._orders.values():
            if o[1] == BUY:
                cash[o[0]] += o[4]
            else:
                btc[o[0]] += o[2]
        return cash, btc
