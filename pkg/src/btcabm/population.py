"""Trader table, initial endowments, entrant pool and entry schedule."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .calibration import CalibrationSet, population_probabilities, traders_target

NEVER = 2**62


class Population(IntEnum):
    MINER = 0
    RANDOM = 1
    CHARTIST = 2
    GOX = 3


POPULATIONS = tuple(Population)


@dataclass
class HardwareUnit:
    purchase_step: int
    hash_rate: float  # H/s
    power: float  # W
    active: bool = True

    def daily_cost(self, epsilon: float) -> float:
        return epsilon * self.power * 24.0


@dataclass
class Trader:
    """Read-only snapshot of one row of :class:`Traders`."""

    id: int
    population: Population
    cash: float
    bitcoins: float
    entry_step: int
    reserved_cash: float = 0.0
    reserved_btc: float = 0.0
    chartist_window: int = 0
    contrarian: bool = False
    hardware: list[HardwareUnit] = field(default_factory=list)
    next_decision_step: int = NEVER


class Traders:
    """Fixed-capacity struct-of-arrays table; row index is the trader id.

    Capacity never changes so the order book can hold views of the
    balance arrays for in-place settlement.
    """

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.n = 0
        self.population = np.full(capacity, -1, dtype=np.int8)
        self.cash = np.zeros(capacity)
        self.btc = np.zeros(capacity)
        self.reserved_cash = np.zeros(capacity)
        self.reserved_btc = np.zeros(capacity)
        self.entry_step = np.zeros(capacity, dtype=np.int64)
        self.tau_c = np.zeros(capacity, dtype=np.int64)
        self.contrarian = np.zeros(capacity, dtype=bool)
        self.next_decision = np.full(capacity, NEVER, dtype=np.int64)
        # miner aggregates over active units
        self.hash = np.zeros(capacity)
        self.power = np.zeros(capacity)
        self.elec_cost = np.zeros(capacity)
        self.gamma1_sum = np.zeros(capacity)
        self.gamma1_count = np.zeros(capacity, dtype=np.int64)
        self.hardware: dict[int, list[HardwareUnit]] = {}  # every unit ever bought
        self.active_units: dict[int, list[HardwareUnit]] = {}
        self._members = {p: np.empty(64, dtype=np.int64) for p in POPULATIONS}
        self._counts = {p: 0 for p in POPULATIONS}

    def add(self, population: Population, cash: float, btc: float, entry_step: int) -> int:
        if self.n == self.capacity:
            raise IndexError("trader table is full")
        i = self.n
        self.n += 1
        self.population[i] = population
        self.cash[i] = cash
        self.btc[i] = btc
        self.entry_step[i] = entry_step
        arr = self._members[population]
        k = self._counts[population]
        if k == arr.shape[0]:
            arr = self._members[population] = np.concatenate([arr, np.empty_like(arr)])
        arr[k] = i
        self._counts[population] = k + 1
        if population == Population.MINER:
            self.hardware[i] = []
            self.active_units[i] = []
        return i

    def members(self, population: Population) -> np.ndarray:
        """Ids of traders in ``population``, in admission order (a view)."""
        return self._members[population][: self._counts[population]]

    def count(self, population: Population) -> int:
        return self._counts[population]

    def available_cash(self, idx):
        return self.cash[idx] - self.reserved_cash[idx]

    def available_btc(self, idx):
        return self.btc[idx] - self.reserved_btc[idx]

    def add_unit(self, i: int, unit: HardwareUnit, epsilon: float) -> None:
        self.hardware[i].append(unit)
        if unit.active:
            self.active_units[i].append(unit)
        self.hash[i] += unit.hash_rate
        self.power[i] += unit.power
        self.elec_cost[i] += unit.daily_cost(epsilon)

    def refresh_miner(self, i: int, epsilon: float) -> None:
        """Recompute cached hash/power/cost of miner ``i`` from its active units."""
        units = self.active_units[i] = [u for u in self.active_units[i] if u.active]
        self.hash[i] = sum(u.hash_rate for u in units)
        self.power[i] = sum(u.power for u in units)
        self.elec_cost[i] = sum(u.daily_cost(epsilon) for u in units)

    def view(self, i: int) -> Trader:
        return Trader(
            id=i,
            population=Population(int(self.population[i])),
            cash=float(self.cash[i]),
            bitcoins=float(self.btc[i]),
            entry_step=int(self.entry_step[i]),
            reserved_cash=float(self.reserved_cash[i]),
            reserved_btc=float(self.reserved_btc[i]),
            chartist_window=int(self.tau_c[i]),
            contrarian=bool(self.contrarian[i]),
            hardware=list(self.hardware.get(i, [])),
            next_decision_step=int(self.next_decision[i]),
        )

    def __len__(self) -> int:
        return self.n


# ---- population draws -------------------------------------------------

def _draw_populations(t: int, k: int, scenario: str, rng: np.random.Generator,
                      calib: CalibrationSet) -> np.ndarray:
    pm, pr, _ = population_probabilities(t, calib)
    u = rng.random(k)
    pops = np.where(u < pm, Population.MINER,
                    np.where(u < pm + pr, Population.RANDOM, Population.CHARTIST)).astype(np.int8)
    if scenario == "gox":
        g = rng.random(k)
        if t < calib.gox_entry_stop:
            pops[(pops == Population.RANDOM) & (g < calib.gox_entry_fraction)] = Population.GOX
    return pops


def assign_population(t: int, scenario: str, rng: np.random.Generator,
                      calib: CalibrationSet) -> Population:
    """Population of one trader entering at step ``t``."""
    return Population(int(_draw_populations(t, 1, scenario, rng, calib)[0]))


def assign_populations(t: int, k: int, scenario: str, rng: np.random.Generator,
                       calib: CalibrationSet) -> np.ndarray:
    return _draw_populations(t, k, scenario, rng, calib)


def setup_trader(traders: Traders, i: int, t: int, rng: np.random.Generator,
                 calib: CalibrationSet) -> None:
    """Per-population attributes drawn once at creation."""
    pop = traders.population[i]
    if pop == Population.CHARTIST:
        tau = int(np.floor(rng.normal(calib.tau_C_mean, calib.tau_C_sd) + 0.5))
        traders.tau_c[i] = max(1, tau)
        traders.contrarian[i] = rng.random() < calib.contrarian_fraction


# ---- endowments -------------------------------------------------------

def generate_initial_traders(calib: CalibrationSet, rng: np.random.Generator,
                             traders: Traders | None = None) -> Traders:
    """Admit the ``N0`` traders present from the start (entry step 0).

    Rank-``i`` trader holds cash ``c1/i**alpha`` and bitcoins proportional
    to ``1/i**alpha``, scaled so the holdings add up to ``BT0`` exactly
    (rank 1 then holds ``b1`` up to the rounding in the published
    constants).  Ranks are shuffled over traders.  Initial miners own one
    CPU unit and take their first decision on a uniform day in
    ``[1, decision_period]``.
    """
    n0 = calib.N0
    if traders is None:
        traders = Traders(n0)
    ranks = rng.permutation(n0) + 1
    pops = _draw_populations(1, n0, "base", rng, calib)
    weights = 1.0 / np.arange(1, n0 + 1, dtype=float) ** calib.initial_alpha
    btc_unit = calib.BT0 / weights.sum()
    ghash = calib.initial_miner_hash * 1e9
    for k in range(n0):
        w = float(ranks[k]) ** calib.initial_alpha
        i = traders.add(Population(int(pops[k])), calib.c1 / w, btc_unit / w, 0)
        if pops[k] == Population.MINER:
            traders.add_unit(i, HardwareUnit(1, ghash, calib.initial_miner_power), calib.epsilon)
            traders.next_decision[i] = int(rng.integers(1, int(calib.decision_period) + 1))
        else:
            setup_trader(traders, i, 0, rng, calib)
    return traders


@dataclass
class EntrantPool:
    """Pre-generated cash endowments, drawn in stored (shuffled) order."""

    cash: np.ndarray
    rank: np.ndarray
    cursor: int = 0

    def take(self, k: int) -> np.ndarray:
        if self.cursor + k > self.cash.shape[0]:
            raise IndexError("entrant pool exhausted")
        out = self.cash[self.cursor:self.cursor + k]
        self.cursor += k
        return out

    def __len__(self) -> int:
        return self.cash.shape[0]


def pool_size(calib: CalibrationSet) -> int:
    needed = max(calib.N_end, int(np.ceil(traders_target(calib.horizon, calib)))) - calib.N0
    return int(np.ceil(max(needed, 0) * 1.05)) + 1


def generate_entrant_pool(calib: CalibrationSet, size: int, rng: np.random.Generator) -> EntrantPool:
    rank = rng.permutation(size) + 1
    cash = calib.q / rank.astype(float) ** calib.entrant_alpha
    return EntrantPool(cash=cash, rank=rank)


class EntrantSchedule:
    """Integer entrant counts whose running total tracks the fitted trader curve.

    Cumulative entrants through step ``t`` equal
    ``round(traders_target(t) - N0)`` (never decreasing).
    """

    def __init__(self, calib: CalibrationSet):
        self.calib = calib
        self.admitted = 0

    def target(self, t: int) -> int:
        return max(0, int(np.floor(traders_target(t, self.calib) - self.calib.N0 + 0.5)))

    def count(self, t: int) -> int:
        k = max(0, self.target(t) - self.admitted)
        self.admitted += k
        return k


def entrants_for_step(t: int, schedule: EntrantSchedule) -> int:
    return schedule.count(t)
