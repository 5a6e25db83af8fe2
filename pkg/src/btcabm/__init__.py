"""Agent-based simulator of the Bitcoin exchange market and mining economy.

Typical use::

    from btcabm import SimConfig, run
    result = run(SimConfig(scenario="gox"), seed=1)
    result.close  # daily closing prices
"""
from .calibration import CalibrationSet
from .engine import RunResult, SimConfig, monte_carlo, run, summarize
from .orderbook import BACKEND

__all__ = ["BACKEND", "CalibrationSet", "RunResult", "SimConfig", "monte_carlo", "run", "summarize"]
__version__ = "0.1.0"
