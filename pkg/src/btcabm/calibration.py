"""Model constants and fitted time curves.

Every quantity the simulator needs from outside data lives here.  The
curves are plain exponentials in the simulation step (one step = one day,
step 1 = 1 September 2010).
"""
from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class FittedExponential:
    """``a * exp(b * (t + t_offset))``."""

    a: float
    b: float
    t_offset: float = 0.0

    def value(self, t):
        return self.a * math.exp(self.b * (t + self.t_offset))

    __call__ = value


@dataclass(frozen=True)
class CalibrationSet:
    # hardware curves: H/(s*$) and W/(H/s)
    R: FittedExponential = field(default_factory=lambda: FittedExponential(8.635e4, 0.006318))
    P: FittedExponential = field(default_factory=lambda: FittedExponential(4.649e-7, -0.004055))
    # unscaled trader count and miner probability
    N_T: FittedExponential = field(default_factory=lambda: FittedExponential(2624.0, 0.002971, 608.0))
    p_M: FittedExponential = field(default_factory=lambda: FittedExponential(0.9425, -0.002654))

    epsilon: float = 1.4e-4  # $ per W*h
    reward_before: float = 72.0
    reward_after: float = 36.0
    halving_step: int = 853

    p0: float = 0.0649
    N0: int = 160
    N_end: int = 39_649
    BT0: float = 23_274.0
    b1: float = 4_117.0
    c1: float = 20_587.0
    q: float = 200_000.0
    entrant_alpha: float = 0.6
    initial_alpha: float = 1.0

    initial_miner_hash: float = 0.0173  # GH/s
    initial_miner_power: float = 75.0  # W

    gamma1_mean: float = 0.15
    gamma1_sd: float = 0.15
    gamma_mean: float = 0.175
    gamma_sd: float = 0.075
    decision_period: float = 60.0
    decision_sd: float = 6.0
    tau_M: int = 15
    Th_M: float = 0.016
    trigger_fraction: float = 0.10
    divest_margin: float = 1.2
    hardware_share: float = 0.5

    Th_C: float = 0.01
    tau_C_mean: float = 20.0
    tau_C_sd: float = 1.0
    contrarian_fraction: float = 0.10

    beta_random_mean: float = 0.25
    beta_random_sd: float = 0.2
    beta_chartist_mean: float = 0.4
    beta_chartist_sd: float = 0.2
    mu_limit: float = 1.05
    K: float = 2.5
    sigma_lo: float = 0.003
    sigma_hi: float = 0.01
    sigma_window: int = 20

    P_lim_miner: float = 1.0
    P_lim_random: float = 0.2
    P_lim_chartist: float = 0.7
    expiry_random_mean: float = 3.0
    expiry_random_sd: float = 1.0

    p_active_random: float = 0.1
    p_active_chartist: float = 0.5
    random_share: float = 0.7
    chartist_share: float = 0.3

    gox_entry_fraction: float = 0.40
    gox_buy_start: int = 700
    gox_sell_start: int = 1249
    gox_entry_stop: int = 1249
    gox_p_active: float = 0.1

    horizon: int = 1856
    scale: float = 100.0

    # ---- validation -------------------------------------------------

    def problems(self) -> list[str]:
        """Return a list of ``"field: reason"`` strings; empty when valid."""
        out = []
        probs = (
            "P_lim_miner P_lim_random P_lim_chartist p_active_random "
            "p_active_chartist random_share chartist_share gox_entry_fraction "
            "gox_p_active trigger_fraction contrarian_fraction hardware_share"
        ).split()
        for name in probs:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                out.append(f"{name}: probability {v} outside [0, 1]")
        if abs(self.random_share + self.chartist_share - 1.0) > 1e-12:
            out.append("random_share: random_share + chartist_share must equal 1")
        positive = (
            "epsilon reward_before reward_after p0 BT0 b1 c1 q "
            "initial_miner_hash initial_miner_power mu_limit K sigma_lo "
            "sigma_hi scale decision_period"
        ).split()
        for name in positive:
            if not getattr(self, name) > 0:
                out.append(f"{name}: must be > 0")
        for name in ("R", "P", "N_T", "p_M"):
            if not getattr(self, name).a > 0:
                out.append(f"{name}.a: must be > 0")
        if self.N0 < 1:
            out.append("N0: must be >= 1")
        if self.N_end < self.N0:
            out.append("N_end: must be >= N0")
        if self.horizon < 1:
            out.append("horizon: must be >= 1")
        if self.halving_step < 1:
            out.append("halving_step: must be >= 1")
        if not self.sigma_lo < self.sigma_hi:
            out.append("sigma_lo: must be < sigma_hi")
        if self.sigma_window < 2:
            out.append("sigma_window: must be >= 2")
        if self.tau_M < 1:
            out.append("tau_M: must be >= 1")
        if not self.gox_buy_start <= self.gox_sell_start:
            out.append("gox_buy_start: must be <= gox_sell_start")
        return out

    def validate(self) -> None:
        errors = self.problems()
        if errors:
            raise ValueError("; ".join(errors))

    # ---- (de)serialisation -------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any], base: CalibrationSet | None = None) -> CalibrationSet:
        """Overlay ``data`` onto ``base`` (defaults when omitted).

        Raises ``KeyError`` for unknown keys and ``TypeError`` for values of
        the wrong kind; both messages carry the dotted key path.
        """
        base = base or cls()
        kinds = {f.name: f for f in dataclasses.fields(cls)}
        updates: dict[str, Any] = {}
        for key, value in data.items():
            if key not in kinds:
                raise KeyError(f"calibration.{key}: unknown key")
            current = getattr(base, key)
            if isinstance(current, FittedExponential):
                if not isinstance(value, dict):
                    raise TypeError(f"calibration.{key}: expected object with a, b[, t_offset]")
                curve = dataclasses.asdict(current)
                for k, v in value.items():
                    if k not in curve:
                        raise KeyError(f"calibration.{key}.{k}: unknown key")
                    curve[k] = _coerce(f"calibration.{key}.{k}", v, float)
                updates[key] = FittedExponential(**curve)
            else:
                updates[key] = _coerce(f"calibration.{key}", value, type(current))
        return dataclasses.replace(base, **updates)


def _coerce(path: str, value: Any, kind: type) -> Any:
    if isinstance(value, bool):
        raise TypeError(f"{path}: expected {kind.__name__}, got bool")
    if kind is int:
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
    elif kind is float and isinstance(value, (int, float)):
        return float(value)
    raise TypeError(f"{path}: expected {kind.__name__}, got {type(value).__name__}")


DEFAULT = CalibrationSet()


def hash_rate_per_dollar(t, calib: CalibrationSet = DEFAULT) -> float:
    """Hash rate (H/s) one dollar of new hardware buys at step ``t``."""
    return calib.R.value(t)


def power_per_hash(t, calib: CalibrationSet = DEFAULT) -> float:
    """Power draw (W per H/s) of hardware bought at step ``t``."""
    return calib.P.value(t)


def block_reward_per_day(t, calib: CalibrationSet = DEFAULT) -> float:
    return calib.reward_before if t <= calib.halving_step else calib.reward_after


def traders_target(t, calib: CalibrationSet = DEFAULT) -> float:
    """Scaled, real-valued trader count the market should have reached at ``t``."""
    return calib.N_T.value(t) / calib.scale


def miner_probability(t, calib: CalibrationSet = DEFAULT) -> float:
    return min(1.0, max(0.0, calib.p_M.value(t)))


def population_probabilities(t, calib: CalibrationSet = DEFAULT) -> tuple[float, float, float]:
    """``(p_miner, p_random, p_chartist)`` for a trader entering at ``t``."""
    pm = miner_probability(t, calib)
    return pm, calib.random_share * (1.0 - pm), calib.chartist_share * (1.0 - pm)


@functools.lru_cache(maxsize=64)
def lognormal_params(mean: float, sd: float) -> tuple[float, float]:
    """Underlying normal ``(mu, sigma)`` of a lognormal with the given mean and sd."""
    s2 = math.log1p((sd / mean) ** 2)
    return math.log(mean) - 0.5 * s2, math.sqrt(s2)
