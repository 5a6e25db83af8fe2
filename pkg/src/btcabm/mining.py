"""Miner economics: hashing capability, electricity, rewards, invest/divest."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .agents import PriceHistory
from .calibration import (
    CalibrationSet,
    block_reward_per_day,
    hash_rate_per_dollar,
    lognormal_params,
    power_per_hash,
)
from .population import HardwareUnit, Population, Traders


def miner_hash(traders: Traders, i: int, t: int | None = None) -> float:
    """Total H/s of miner ``i``'s active units bought at or before ``t``."""
    return sum(u.hash_rate for u in traders.active_units.get(i, ())
               if t is None or u.purchase_step <= t)


def network_hash(traders: Traders, t: int | None = None) -> float:
    return float(sum(miner_hash(traders, int(i), t) for i in traders.members(Population.MINER)))


def unit_daily_cost(unit: HardwareUnit, calib: CalibrationSet) -> float:
    return unit.daily_cost(calib.epsilon)


def daily_electricity_cost(traders: Traders, i: int, calib: CalibrationSet) -> float:
    """$/day for miner ``i``: power frozen at purchase, billed 24 h."""
    return sum(unit_daily_cost(u, calib) for u in traders.active_units.get(i, ()))


def distribute_rewards(traders: Traders, t: int, calib: CalibrationSet,
                       total_hash: float | None = None) -> np.ndarray:
    """Credit each miner its hash share of the day's block reward.

    Returns the payout per miner, aligned with ``traders.members(MINER)``.
    """
    miners = traders.members(Population.MINER)
    h = traders.hash[miners]
    total = float(h.sum()) if total_hash is None else total_hash
    if not total > 0.0:
        return np.zeros(miners.shape[0])
    pay = h / total * block_reward_per_day(t, calib)
    traders.btc[miners] += pay
    return pay


def expected_revenue(hash_rate: float, network: float, price: float, t: int,
                     calib: CalibrationSet) -> float:
    """$/day a unit of ``hash_rate`` earns when the whole network runs ``network`` H/s."""
    if not network > 0.0:
        return 0.0
    return hash_rate / network * block_reward_per_day(t, calib) * price


def evaluate_buy_constraint(candidate_hash: float, candidate_cost: float, network: float,
                            price: float, t: int, calib: CalibrationSet) -> bool:
    """True when the candidate's electricity bill is below its expected mining income.

    The candidate joins the network, so its share is taken against
    ``network + candidate_hash``.
    """
    return candidate_cost < expected_revenue(candidate_hash, network + candidate_hash, price, t, calib)


def evaluate_divest(unit: HardwareUnit, network: float, price: float, t: int,
                    calib: CalibrationSet) -> bool:
    """True when the unit's bill exceeds ``divest_margin`` times its income (strictly)."""
    income = expected_revenue(unit.hash_rate, network, price, t, calib)
    return unit_daily_cost(unit, calib) > calib.divest_margin * income


def next_decision_gap(rng: np.random.Generator, calib: CalibrationSet) -> int:
    return max(1, int(np.floor(calib.decision_period + rng.normal(0.0, calib.decision_sd) + 0.5)))


@dataclass
class MinerDecision:
    next_step: int
    sell_amount: float = 0.0
    hardware_spend: float = 0.0
    unit: HardwareUnit | None = None
    divested: list[HardwareUnit] = field(default_factory=list)
    hash_delta: float = 0.0
    gamma1: float = 0.0
    gamma: float = 0.0
    bought: bool = False


def miner_decision(traders: Traders, i: int, price: float, network: float, t: int,
                   rng: np.random.Generator, calib: CalibrationSet) -> MinerDecision:
    """Run one invest/divest decision for miner ``i`` and apply it to the table.

    Mutates hardware and cash (hardware is paid at once).  The sell order
    is returned as ``sell_amount`` for the caller to place as a market
    order that never expires.  ``network`` is the current network hash,
    including this miner.
    """
    dec = MinerDecision(next_step=t + next_decision_gap(rng, calib))
    traders.next_decision[i] = dec.next_step

    before = traders.hash[i]
    if network > 0.0:
        # evaluate_divest inlined (same float expression), this loop is hot
        eps, margin = calib.epsilon, calib.divest_margin
        reward = block_reward_per_day(t, calib)
        for unit in traders.active_units[i]:
            if eps * unit.power * 24.0 > margin * (unit.hash_rate / network * reward * price):
                unit.active = False
                dec.divested.append(unit)
    else:
        for unit in traders.active_units[i]:
            if evaluate_divest(unit, network, price, t, calib):
                unit.active = False
                dec.divested.append(unit)
    if dec.divested:
        traders.refresh_miner(i, calib.epsilon)
    network += traders.hash[i] - before

    g1 = min(rng.lognormal(*lognormal_params(calib.gamma1_mean, calib.gamma1_sd)), 1.0)
    g = min(rng.lognormal(*lognormal_params(calib.gamma_mean, calib.gamma_sd)), 1.0)
    dec.gamma1, dec.gamma = g1, g
    cash = max(traders.cash[i] - traders.reserved_cash[i], 0.0)
    btc = max(traders.btc[i] - traders.reserved_btc[i], 0.0)

    if cash > 0.0:
        budget = g1 * cash + g * btc * price
        spend = min(calib.hardware_share * budget, cash)
        h = spend * hash_rate_per_dollar(t, calib)
        unit = HardwareUnit(t, h, power_per_hash(t, calib) * h)
        if h > 0.0 and evaluate_buy_constraint(h, unit_daily_cost(unit, calib), network, price, t, calib):
            traders.cash[i] -= spend
            traders.add_unit(i, unit, calib.epsilon)
            traders.gamma1_sum[i] += g1
            traders.gamma1_count[i] += 1
            dec.unit, dec.hardware_spend, dec.bought = unit, spend, True
            dec.sell_amount = g * btc
        else:
            dec.sell_amount = g * btc / 2.0
    else:
        dec.sell_amount = g * btc
    dec.hash_delta = traders.hash[i] - before
    return dec


def trigger_check(history: PriceHistory, t: int, calib: CalibrationSet) -> bool:
    """True when the price rose by more than ``Th_M`` over the last ``tau_M`` days."""
    if t <= calib.tau_M:
        return False
    return bool(history.variation(t, calib.tau_M) > calib.Th_M)


def trigger_sample(miners: np.ndarray, rng: np.random.Generator, calib: CalibrationSet) -> np.ndarray:
    """Uniform ``trigger_fraction`` sample of ``miners`` (without replacement)."""
    k = int(np.floor(calib.trigger_fraction * miners.shape[0] + 0.5))
    if k == 0:
        return miners[:0]
    return np.sort(rng.choice(miners, size=k, replace=False))
