# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled order book core.

Same contract and float semantics as ``_pybook.BookCore``.  Orders live in
slot arrays recycled through a free list; each side is a binary heap of
(key, seq, slot) with lazy deletion (an entry is stale once its slot's
order id changes or the slot is freed).
"""
import numpy as np
cimport numpy as cnp
from cpython.mem cimport PyMem_Malloc, PyMem_Realloc, PyMem_Free

cnp.import_array()

cdef enum:
    BUY = 0
    SELL = 1

NEVER = 2**62


cpdef double transaction_price(double buy_limit, double sell_limit, double current):
    if buy_limit > 0.0 and sell_limit > 0.0:
        return (buy_limit + sell_limit) / 2.0
    if buy_limit > 0.0:
        return buy_limit if buy_limit < current else current
    if sell_limit > 0.0:
        return sell_limit if sell_limit > current else current
    return current


cdef struct Order:
    long long oid
    long long trader
    int side
    double residual
    double limit
    double budget
    long long step
    long long expiry
    long long seq
    bint alive


cdef struct HeapEntry:
    double key
    long long seq
    long long oid
    int slot


cdef struct Heap:
    HeapEntry* data
    Py_ssize_t size
    Py_ssize_t cap


cdef inline bint _less(HeapEntry* a, HeapEntry* b) nogil:
    if a.key < b.key:
        return True
    if a.key > b.key:
        return False
    return a.seq < b.seq


cdef int _heap_push(Heap* h, HeapEntry e) except -1:
    cdef Py_ssize_t i, parent
    cdef HeapEntry* grown
    if h.size == h.cap:
        h.cap = h.cap * 2 if h.cap else 256
        grown = <HeapEntry*> PyMem_Realloc(h.data, h.cap * sizeof(HeapEntry))
        if grown == NULL:
            raise MemoryError()
        h.data = grown
    i = h.size
    h.size += 1
    while i > 0:
        parent = (i - 1) >> 1
        if _less(&e, &h.data[parent]):
            h.data[i] = h.data[parent]
            i = parent
        else:
            break
    h.data[i] = e
    return 0


cdef void _heap_pop(Heap* h) nogil:
    cdef Py_ssize_t i, child, n
    cdef HeapEntry last
    h.size -= 1
    n = h.size
    if n == 0:
        return
    last = h.data[n]
    i = 0
    while True:
        child = 2 * i + 1
        if child >= n:
            break
        if child + 1 < n and _less(&h.data[child + 1], &h.data[child]):
            child += 1
        if _less(&h.data[child], &last):
            h.data[i] = h.data[child]
            i = child
        else:
            break
    h.data[i] = last


cdef void _heapify(Heap* h) nogil:
    cdef Py_ssize_t start, i, child, n = h.size
    cdef HeapEntry item
    if n < 2:
        return
    start = (n - 2) >> 1
    while start >= 0:
        item = h.data[start]
        i = start
        while True:
            child = 2 * i + 1
            if child >= n:
                break
            if child + 1 < n and _less(&h.data[child + 1], &h.data[child]):
                child += 1
            if _less(&h.data[child], &item):
                h.data[i] = h.data[child]
                i = child
            else:
                break
        h.data[i] = item
        start -= 1


cdef class BookCore:
    cdef Order* _o
    cdef Py_ssize_t _cap
    cdef Py_ssize_t _n_alive
    cdef int* _free
    cdef Py_ssize_t _n_free
    cdef Py_ssize_t _hi
    cdef Heap _buys
    cdef Heap _sells
    cdef bint _settle
    cdef double[::1] _cash
    cdef double[::1] _btc
    cdef double[::1] _rcash
    cdef double[::1] _rbtc
    cdef long long _seq
    cdef long long _step
    cdef list _log
    cdef public double last_price
    cdef public bint record_trades
    cdef public double day_volume
    cdef public double day_turnover
    cdef public long long day_trades
    cdef public long long total_trades

    backend = "cython"

    def __cinit__(self):
        self._o = NULL
        self._free = NULL
        self._buys.data = NULL
        self._buys.size = 0
        self._buys.cap = 0
        self._sells.data = NULL
        self._sells.size = 0
        self._sells.cap = 0

    def __init__(self, last_price, cash=None, btc=None, reserved_cash=None,
                 reserved_btc=None, record_trades=True):
        if not last_price > 0:
            raise ValueError("last_price must be > 0")
        self.last_price = float(last_price)
        self._settle = cash is not None
        if self._settle:
            self._cash = cash
            self._btc = btc
            self._rcash = reserved_cash
            self._rbtc = reserved_btc
        self.record_trades = record_trades
        self._cap = 0
        self._hi = 0
        self._n_alive = 0
        self._n_free = 0
        self._seq = 0
        self._step = 0
        self._log = []
        self.day_volume = 0.0
        self.day_turnover = 0.0
        self.day_trades = 0
        self.total_trades = 0
        self._grow()

    def __dealloc__(self):
        PyMem_Free(self._o)
        PyMem_Free(self._free)
        PyMem_Free(self._buys.data)
        PyMem_Free(self._sells.data)

    cdef int _grow(self) except -1:
        cdef Py_ssize_t cap = self._cap * 2 if self._cap else 1024
        cdef Order* o = <Order*> PyMem_Realloc(self._o, cap * sizeof(Order))
        if o == NULL:
            raise MemoryError()
        self._o = o
        cdef int* f = <int*> PyMem_Realloc(self._free, cap * sizeof(int))
        if f == NULL:
            raise MemoryError()
        self._free = f
        self._cap = cap
        return 0

    cdef Py_ssize_t _alloc(self) except -1:
        if self._n_free:
            self._n_free -= 1
            return self._free[self._n_free]
        if self._hi == self._cap:
            self._grow()
        self._hi += 1
        return self._hi - 1

    cdef void _release(self, Py_ssize_t slot):
        cdef Order* o = &self._o[slot]
        if self._settle:
            if o.side == BUY:
                self._rcash[o.trader] -= o.budget
            else:
                self._rbtc[o.trader] -= o.residual
        o.alive = False
        self._free[self._n_free] = <int> slot
        self._n_free += 1
        self._n_alive -= 1

    # ---- submission ---------------------------------------------------

    cdef long long _submit(self, long long oid, long long trader, int side, double amount,
                           double limit, double budget, long long step,
                           long long expiry) except -1:
        if not amount > 0.0:
            raise ValueError(f"order amount must be > 0, got {amount}")
        if not limit >= 0.0:
            raise ValueError(f"limit price must be >= 0, got {limit}")
        if side == BUY and not budget >= 0.0:
            raise ValueError("buy budget must be >= 0")
        cdef Py_ssize_t slot = self._alloc()
        cdef Order* o = &self._o[slot]
        cdef HeapEntry e
        self._step = step
        o.oid = oid
        o.trader = trader
        o.side = side
        o.residual = amount
        o.limit = limit
        o.budget = budget if side == BUY else 0.0
        o.step = step
        o.expiry = expiry
        o.seq = self._seq
        o.alive = True
        self._seq += 1
        self._n_alive += 1
        if self._settle:
            if side == BUY:
                self._rcash[trader] += o.budget
            else:
                self._rbtc[trader] += amount
        e.seq = o.seq
        e.oid = oid
        e.slot = <int> slot
        if side == BUY:
            e.key = -limit
            _heap_push(&self._buys, e)
        else:
            e.key = limit
            _heap_push(&self._sells, e)
        return self._match()

    def submit(self, long long order_id, long long trader, int side, double amount,
               double limit, double budget, long long step, long long expiry):
        return self._submit(order_id, trader, side, amount, limit, budget, step, expiry)

    def submit_batch(self, long long first_id, traders, sides, amounts, limits, budgets,
                     expiries, long long step):
        cdef cnp.int64_t[::1] tr = np.ascontiguousarray(traders, dtype=np.int64)
        cdef cnp.int8_t[::1] sd = np.ascontiguousarray(sides, dtype=np.int8)
        cdef double[::1] am = np.ascontiguousarray(amounts, dtype=np.float64)
        cdef double[::1] lm = np.ascontiguousarray(limits, dtype=np.float64)
        cdef double[::1] bg = np.ascontiguousarray(budgets, dtype=np.float64)
        cdef cnp.int64_t[::1] ex = np.ascontiguousarray(expiries, dtype=np.int64)
        cdef Py_ssize_t k, n = tr.shape[0]
        cdef long long trades = 0
        for k in range(n):
            trades += self._submit(first_id + k, tr[k], sd[k], am[k], lm[k], bg[k], step, ex[k])
        return trades

    def submit_quoted(self, long long first_id, traders, sides, betas, markets, noises,
                      expiries, long long step, double min_amount):
        """Price and submit pre-drawn orders one by one against the live price.

        See the pure-Python twin for the sizing rules.  Returns ids used.
        """
        if not self._settle:
            raise ValueError("submit_quoted needs account arrays")
        cdef cnp.int64_t[::1] tr = np.ascontiguousarray(traders, dtype=np.int64)
        cdef cnp.int8_t[::1] sd = np.ascontiguousarray(sides, dtype=np.int8)
        cdef double[::1] bt = np.ascontiguousarray(betas, dtype=np.float64)
        cdef cnp.uint8_t[::1] mk = np.ascontiguousarray(markets, dtype=np.uint8)
        cdef double[::1] nz = np.ascontiguousarray(noises, dtype=np.float64)
        cdef cnp.int64_t[::1] ex = np.ascontiguousarray(expiries, dtype=np.int64)
        cdef Py_ssize_t k, i, n = tr.shape[0]
        cdef long long oid = first_id
        cdef double p, free, amount, limit, escrow, budget
        for k in range(n):
            i = tr[k]
            p = self.last_price
            budget = 0.0
            if sd[k] == BUY:
                free = self._cash[i] - self._rcash[i]
                if free < 0.0:
                    free = 0.0
                amount = free * bt[k] / p
                if mk[k]:
                    limit = 0.0
                    escrow = p
                else:
                    limit = p * nz[k]
                    escrow = limit
                if amount * escrow > free:
                    amount = free / escrow
                    budget = free
                else:
                    budget = amount * escrow
            else:
                free = self._btc[i] - self._rbtc[i]
                if free < 0.0:
                    free = 0.0
                amount = free * bt[k]
                limit = 0.0 if mk[k] else p / nz[k]
            if amount > min_amount:
                self._submit(oid, i, sd[k], amount, limit, budget, step, ex[k])
                oid += 1
        return oid - first_id

    # ---- matching -----------------------------------------------------

    cdef inline Py_ssize_t _top(self, Heap* h):
        cdef HeapEntry* e
        cdef Order* o
        while h.size:
            e = &h.data[0]
            o = &self._o[e.slot]
            if o.alive and o.oid == e.oid:
                return e.slot
            _heap_pop(h)
        return -1

    cdef long long _match(self) except -1:
        cdef long long n = 0
        cdef Py_ssize_t bs, ss
        cdef Order* b
        cdef Order* s
        cdef double bl, sl, price, q, value, spent
        cdef bint buy_done
        while True:
            bs = self._top(&self._buys)
            if bs < 0:
                break
            ss = self._top(&self._sells)
            if ss < 0:
                break
            b = &self._o[bs]
            s = &self._o[ss]
            bl = b.limit
            sl = s.limit
            if bl > 0.0 and sl > 0.0 and sl > bl:
                break
            price = transaction_price(bl, sl, self.last_price)
            q = b.residual if b.residual < s.residual else s.residual
            buy_done = False
            if bl > 0.0:
                value = q * price
                spent = q * bl
            else:
                value = q * price
                if value > b.budget:
                    value = b.budget
                    q = value / price
                    buy_done = True
                spent = value
            if not q > 0.0:
                self._release(bs)
                continue
            if self._settle:
                self._cash[b.trader] -= value
                self._btc[b.trader] += q
                self._rcash[b.trader] -= spent
                self._cash[s.trader] += value
                self._btc[s.trader] -= q
                self._rbtc[s.trader] -= q
            b.budget -= spent
            b.residual -= q
            s.residual -= q
            self.last_price = price
            n += 1
            self.day_trades += 1
            self.total_trades += 1
            self.day_volume += q
            self.day_turnover += value
            if self.record_trades:
                self._log.append((self._step, b.oid, s.oid, price, q, b.trader, s.trader))
            if s.residual <= 0.0:
                self._release(ss)
            if buy_done or b.residual <= 0.0:
                self._release(bs)
        return n

    # ---- expiry and inspection ---------------------------------------

    def expire(self, long long t, bint collect=True):
        cdef Py_ssize_t i
        cdef Order* o
        cdef list dead = []
        for i in range(self._hi):
            o = &self._o[i]
            if o.alive and o.expiry <= t:
                dead.append((o.seq, i))
        dead.sort()
        out = []
        for _, i in dead:
            o = &self._o[i]
            if collect:
                out.append((o.oid, o.trader, o.side, o.residual, o.limit, o.budget,
                            o.step, o.expiry, o.seq))
            self._release(i)
        if dead:
            self._rebuild()
        return out if collect else len(dead)

    cdef void _compact(self, Heap* h):
        cdef Py_ssize_t i, j = 0
        cdef Order* o
        for i in range(h.size):
            o = &self._o[h.data[i].slot]
            if o.alive and o.oid == h.data[i].oid:
                h.data[j] = h.data[i]
                j += 1
        h.size = j
        _heapify(h)

    cdef void _rebuild(self):
        self._compact(&self._buys)
        self._compact(&self._sells)

    def snapshot(self, int side):
        """Resting orders of one side in queue-priority order, as tuples."""
        cdef Heap* h = &self._buys if side == BUY else &self._sells
        cdef Py_ssize_t i
        cdef Order* o
        live = []
        for i in range(h.size):
            o = &self._o[h.data[i].slot]
            if o.alive and o.oid == h.data[i].oid:
                live.append((h.data[i].key, h.data[i].seq, h.data[i].slot))
        live.sort()
        out = []
        for _, _, i in live:
            o = &self._o[i]
            out.append((o.oid, o.trader, o.side, o.residual, o.limit, o.budget,
                        o.step, o.expiry, o.seq))
        return out

    def __len__(self):
        return self._n_alive

    def reset_day(self):
        self.day_volume = 0.0
        self.day_turnover = 0.0
        self.day_trades = 0

    def trade_log(self, Py_ssize_t start=0):
        return self._log[start:]

    def clear_trade_log(self):
        self._log = []

    @property
    def n_logged(self):
        return len(self._log)

    def open_totals(self):
        cdef double cash = 0.0, btc = 0.0
        cdef Py_ssize_t i
        cdef Order* o
        for i in range(self._hi):
            o = &self._o[i]
            if o.alive:
                if o.side == BUY:
                    cash += o.budget
                else:
                    btc += o.residual
        return cash, btc

    def open_by_trader(self, Py_ssize_t n):
        cash = np.zeros(n)
        btc = np.zeros(n)
        cdef double[::1] c = cash
        cdef double[::1] b = btc
        cdef Py_ssize_t i
        cdef Order* o
        for i in range(self._hi):
            o = &self._o[i]
            if o.alive:
                if o.side == BUY:
                    c[o.trader] += o.budget
                else:
                    b[o.trader] += o.residual
        return cash, btc
