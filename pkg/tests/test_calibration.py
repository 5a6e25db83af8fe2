import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from btcabm.calibration import (
    CalibrationSet,
    FittedExponential,
    block_reward_per_day,
    hash_rate_per_dollar,
    lognormal_params,
    miner_probability,
    population_probabilities,
    power_per_hash,
    traders_target,
)

C = CalibrationSet()


def test_hash_rate_per_dollar_anchor_points():
    assert hash_rate_per_dollar(1) == pytest.approx(8.635e4 * math.exp(0.006318), rel=1e-12)
    assert hash_rate_per_dollar(1) == pytest.approx(86_897, rel=1e-4)
    assert hash_rate_per_dollar(0) == 86_350.0
    # ~1.07e10 H/(s*$), same order as 10.42 GH/(s*$) for Sept 2015
    assert hash_rate_per_dollar(1856) == pytest.approx(1.07e10, rel=0.01)


def test_hash_rate_per_dollar_near_mid_2015_hardware():
    assert hash_rate_per_dollar(1667) / 1e9 == pytest.approx(2.756, rel=0.35)


def test_power_per_hash_anchor_points():
    assert power_per_hash(0) == 4.649e-7
    p = power_per_hash(1856) * 1e9
    assert p == pytest.approx(0.251, abs=0.001)
    assert p == pytest.approx(0.27, rel=0.10)


def test_power_per_hash_strictly_decreasing():
    vals = np.array([power_per_hash(t) for t in range(0, 1857)])
    assert np.all(np.diff(vals) < 0)


def test_block_reward_halving():
    assert block_reward_per_day(1) == 72
    assert block_reward_per_day(853) == 72
    assert block_reward_per_day(854) == 36


def test_block_reward_total_over_horizon():
    total = sum(block_reward_per_day(t) for t in range(1, C.horizon + 1))
    assert total == 853 * 72 + (C.horizon - 853) * 36


def test_trader_count_anchors():
    assert traders_target(1) == pytest.approx(160, abs=1)
    assert traders_target(1856) == pytest.approx(39_649, abs=40)
    assert traders_target(2) - traders_target(1) == pytest.approx(0.48, abs=0.01)


def test_miner_probability_anchors():
    assert miner_probability(1) == pytest.approx(0.940, abs=0.001)
    assert miner_probability(1856) == pytest.approx(0.9425 * math.exp(-4.926), rel=1e-3)
    assert miner_probability(1856) == pytest.approx(0.0068, abs=0.0002)


def test_population_probabilities_at_start():
    pm, pr, pc = population_probabilities(1)
    assert (pm, pr, pc) == pytest.approx((0.940, 0.042, 0.018), abs=0.001)


@pytest.mark.parametrize("a,expected", [(1e-9, (0.0, 0.7, 0.3)), (50.0, (1.0, 0.0, 0.0))])
def test_population_probabilities_extremes(a, expected):
    cal = dataclasses.replace(C, p_M=FittedExponential(a, 0.0))
    assert population_probabilities(5, cal) == pytest.approx(expected, abs=1e-8)


@given(st.integers(min_value=1, max_value=1856))
def test_population_probabilities_sum_to_one(t):
    assert sum(population_probabilities(t)) == pytest.approx(1.0, abs=1e-12)


@given(st.integers(min_value=1, max_value=1856))
def test_curves_finite_and_positive(t):
    for curve in (C.R, C.P, C.N_T, C.p_M):
        v = curve.value(t)
        assert math.isfinite(v) and v > 0


def test_lognormal_params_match_moments():
    mu, s = lognormal_params(0.25, 0.2)
    mean = math.exp(mu + s * s / 2)
    sd = math.sqrt((math.exp(s * s) - 1) * math.exp(2 * mu + s * s))
    assert mean == pytest.approx(0.25, rel=1e-12)
    assert sd == pytest.approx(0.2, rel=1e-12)


def test_default_set_is_valid():
    assert C.problems() == []
    assert C.sigma_lo < C.sigma_hi


@pytest.mark.parametrize("field,value,fragment", [
    ("P_lim_random", 1.5, "P_lim_random"),
    ("sigma_lo", 0.02, "sigma_lo"),
    ("epsilon", 0.0, "epsilon"),
    ("halving_step", 0, "halving_step"),
])
def test_invalid_values_are_reported_by_name(field, value, fragment):
    cal = dataclasses.replace(C, **{field: value})
    assert any(p.startswith(fragment) for p in cal.problems())
    with pytest.raises(ValueError, match=fragment):
        cal.validate()


def test_from_dict_overlays_and_reports_paths():
    cal = CalibrationSet.from_dict({"gamma1_mean": 0.25, "R": {"b": 0.007}, "N0": 100.0})
    assert cal.gamma1_mean == 0.25 and cal.R.b == 0.007 and cal.R.a == C.R.a and cal.N0 == 100
    with pytest.raises(KeyError, match="calibration.nope"):
        CalibrationSet.from_dict({"nope": 1})
    with pytest.raises(KeyError, match=r"calibration\.R\.c"):
        CalibrationSet.from_dict({"R": {"c": 1}})
    with pytest.raises(TypeError, match="calibration.N0"):
        CalibrationSet.from_dict({"N0": 1.5})
    with pytest.raises(TypeError, match="calibration.K"):
        CalibrationSet.from_dict({"K": "big"})


def test_round_trip_through_dict():
    assert CalibrationSet.from_dict(C.to_dict()) == C
