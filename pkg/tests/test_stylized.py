import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from statsmodels.tsa.stattools import acf as sm_acf
from statsmodels.tsa.stattools import adfuller

from btcabm import stylized
from btcabm.stylized import (
    acf,
    adf_statistic,
    excess_kurtosis,
    log_returns,
    noise_band,
    pearson,
    per_capita,
    return_stats,
    wealth_report,
)


def test_kurtosis_of_normal_sample():
    x = np.random.default_rng(0).standard_normal(100_000)
    assert excess_kurtosis(x) == pytest.approx(0.0, abs=0.1)


def test_kurtosis_two_point():
    assert excess_kurtosis(np.tile([-1.0, 1.0], 50)) == pytest.approx(-2.0)


def test_kurtosis_rejects_degenerate():
    with pytest.raises(ValueError):
        excess_kurtosis(np.ones(10))
    with pytest.raises(ValueError):
        excess_kurtosis([1.0, 2.0])


def test_kurtosis_matches_scipy_style_definition():
    x = np.random.default_rng(1).standard_t(5, 500)
    d = x - x.mean()
    assert excess_kurtosis(x) == pytest.approx(np.mean(d**4) / np.mean(d**2) ** 2 - 3)


def test_acf_alternating():
    assert acf(np.tile([1.0, -1.0], 50), 1)[0] == pytest.approx(-1.0, abs=0.02)


def test_acf_white_noise():
    x = np.random.default_rng(2).standard_normal(10_000)
    r = acf(x, 10)
    assert np.mean(np.abs(r) < 3 / np.sqrt(x.shape[0])) >= 0.8


def test_acf_matches_statsmodels():
    x = np.random.default_rng(3).standard_normal(700).cumsum()
    np.testing.assert_allclose(acf(x, 10), sm_acf(x, nlags=10, fft=False)[1:], rtol=1e-10)


def test_acf_rejects():
    with pytest.raises(ValueError):
        acf(np.ones(20), 3)
    with pytest.raises(ValueError):
        acf(np.arange(5.0), 5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(30, 400), st.integers(0, 3))
def test_adf_matches_statsmodels(seed, n, lags):
    y = np.random.default_rng(seed).standard_normal(n).cumsum()
    ours = adf_statistic(y, lags)
    ref = adfuller(y, maxlag=lags, autolag=None, regression="c")[0]
    assert ours == pytest.approx(ref, rel=1e-9, abs=1e-9)


@given(st.integers(0, 2**32), st.floats(-1e3, 1e3))
@settings(max_examples=40, deadline=None)
def test_adf_shift_invariant(seed, c):
    y = np.random.default_rng(seed).standard_normal(200).cumsum()
    assert adf_statistic(y + c) == pytest.approx(adf_statistic(y), rel=1e-6, abs=1e-6)


def test_adf_random_walks_keep_unit_root():
    hits = [adf_statistic(np.random.default_rng(s).standard_normal(2000).cumsum()) > -2.86
            for s in range(50)]
    assert np.mean(hits) >= 0.9


def test_adf_rejects_mean_reverting_series():
    for s in range(10):
        e = np.random.default_rng(s).standard_normal(2000)
        y = np.empty_like(e)
        y[0] = e[0]
        for t in range(1, e.shape[0]):
            y[t] = 0.2 * y[t - 1] + e[t]
        assert adf_statistic(y) < -2.86


def test_adf_rejects_short_or_singular():
    with pytest.raises(ValueError):
        adf_statistic(np.arange(10.0))
    with pytest.raises(ValueError):
        adf_statistic(np.ones(100))


def test_pearson():
    x = np.random.default_rng(4).standard_normal(50)
    assert pearson(x, x) == pytest.approx(1.0)
    assert pearson(x, -x) == pytest.approx(-1.0)
    assert pearson(x, 2 * x + 3) <= 1.0
    with pytest.raises(ValueError):
        pearson(x, np.ones(50))
    with pytest.raises(ValueError):
        pearson([1.0, 2.0], [1.0, 2.0])


def test_pure_functions_repeatable():
    p = np.exp(np.random.default_rng(5).standard_normal(300).cumsum() * 0.02)
    assert return_stats(p) == return_stats(p.copy())


def test_return_stats_fields():
    p = np.exp(np.random.default_rng(6).standard_normal(300).cumsum() * 0.02)
    s = return_stats(p)
    assert s["n_returns"] == 299
    assert s["noise_band"] == pytest.approx(noise_band(299)) == pytest.approx(2 / np.sqrt(299))
    assert len(s["acf_abs"]) == len(s["acf_raw"]) == 10
    assert s["unit_root"] == (s["adf_statistic"] > -2.86)
    np.testing.assert_allclose(log_returns(p), np.diff(np.log(p)))
    with pytest.raises(ValueError):
        log_returns([1.0, 0.0])


def test_per_capita():
    np.testing.assert_array_equal(per_capita([10.0, 6.0], [5, 3]), [2.0, 2.0])
    assert np.isnan(per_capita([1.0], [0])[0])


def test_wealth_report_series_only():
    cols = {"close": np.array([1.0, 2.0])}
    for pop in stylized.POPULATION_NAMES:
        cols[f"wealth_{pop}"] = np.array([10.0, 20.0])
        cols[f"n_{pop}"] = np.array([2, 4])
    rep = wealth_report(cols)
    assert rep["per_capita_start"]["miner"] == 5.0 and rep["per_capita_end"]["gox"] == 5.0


def test_wealth_report_with_traders():
    import dataclasses

    from btcabm.calibration import CalibrationSet
    from btcabm.engine import SimConfig, run

    res = run(SimConfig(calibration=dataclasses.replace(CalibrationSet(), horizon=200)), 1)
    rep = wealth_report(res.columns(), res.traders, res.initial_ids, res.initial_wealth)
    assert -1.0 <= rep["miner_wealth_hash_correlation"] <= 1.0
    assert len(rep["initial_miner_ratio"]) == len(rep["initial_miner_gamma"])
    assert all(r > 0 for r in rep["initial_miner_ratio"])
