"""Return statistics and wealth summaries computed from run output.

Every function here is pure: it takes arrays and returns numbers, so the
same code serves live runs, saved CSVs and real price series.
"""
from __future__ import annotations

import math

import numpy as np

ADF_CRITICAL_5PCT = -2.86
ACF_LAGS = 10
POPULATION_NAMES = ("miner", "random", "chartist", "gox")


def log_returns(prices) -> np.ndarray:
    p = np.asarray(prices, dtype=float)
    if np.any(p <= 0.0):
        raise ValueError("prices must be positive for log returns")
    return np.diff(np.log(p))


def excess_kurtosis(x) -> float:
    """Sample excess kurtosis with biased (population) moments; 0 for a normal."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 4:
        raise ValueError("excess_kurtosis needs at least 4 observations")
    d = x - x.mean()
    m2 = np.mean(d * d)
    if m2 == 0.0:
        raise ValueError("excess_kurtosis of a zero-variance series is undefined")
    return float(np.mean(d**4) / m2**2 - 3.0)


def acf(x, max_lag: int = ACF_LAGS) -> np.ndarray:
    """Autocorrelations at lags ``1..max_lag`` (direct sums, common denominator)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if max_lag >= n:
        raise ValueError(f"max_lag {max_lag} needs more than {n} observations")
    d = x - x.mean()
    denom = float(d @ d)
    if denom == 0.0:
        raise ValueError("acf of a zero-variance series is undefined")
    return np.array([float(d[:-k] @ d[k:]) / denom for k in range(1, max_lag + 1)])


def noise_band(n: int) -> float:
    """Half-width of the 95% band for the ACF of white noise of length ``n``."""
    return 2.0 / math.sqrt(n)


def adf_statistic(y, lag_order: int = 1) -> float:
    """Augmented Dickey-Fuller t-statistic with a constant and ``lag_order`` lagged differences.

    Fits ``dy_t = a + g*y_{t-1} + sum_j d_j*dy_{t-j}`` by OLS and returns
    the t-ratio of ``g``.
    """
    y = np.asarray(y, dtype=float)
    dy = np.diff(y)
    p = lag_order
    if y.shape[0] < 20 + p:
        raise ValueError(f"adf_statistic needs at least {20 + p} observations")
    n = dy.shape[0] - p
    target = dy[p:]
    cols = [y[p:-1]]
    cols += [dy[p - j:-j] for j in range(1, p + 1)]
    cols.append(np.ones(n))
    X = np.column_stack(cols)
    beta, *_ = np.linalg.lstsq(X, target, rcond=None)
    resid = target - X @ beta
    dof = n - X.shape[1]
    s2 = float(resid @ resid) / dof
    xtx = X.T @ X
    if np.linalg.matrix_rank(xtx) < X.shape[1]:
        raise ValueError("singular ADF regression")
    cov = s2 * np.linalg.inv(xtx)
    return float(beta[0] / math.sqrt(cov[0, 0]))


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.shape[0] < 3:
        raise ValueError("pearson needs two equal-length series of at least 3 points")
    dx, dy = x - x.mean(), y - y.mean()
    den = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if den == 0.0:
        raise ValueError("pearson of a zero-variance series is undefined")
    return max(-1.0, min(1.0, float(dx @ dy) / den))


def return_stats(prices, lag_order: int = 1, max_lag: int = ACF_LAGS) -> dict:
    """Fat-tail, clustering and unit-root statistics of a daily price series."""
    prices = np.asarray(prices, dtype=float)
    r = log_returns(prices)
    n = r.shape[0]
    acf_abs = acf(np.abs(r), max_lag)
    acf_raw = acf(r, max_lag)
    band = noise_band(n)
    adf = adf_statistic(np.log(prices), lag_order)
    return {
        "n_returns": int(n),
        "excess_kurtosis": excess_kurtosis(r),
        "acf_abs": acf_abs.tolist(),
        "acf_raw": acf_raw.tolist(),
        "mean_acf_abs": float(acf_abs.mean()),
        "mean_abs_acf_raw": float(np.abs(acf_raw).mean()),
        "noise_band": band,
        "adf_statistic": adf,
        "adf_critical": ADF_CRITICAL_5PCT,
        "fat_tails": bool(excess_kurtosis(r) > 0.0),
        "volatility_clustering": bool(acf_abs.mean() > band),
        "raw_returns_uncorrelated": bool(np.abs(acf_raw).mean() < 0.1),
        "unit_root": bool(adf > ADF_CRITICAL_5PCT),
    }


def per_capita(wealth, count) -> np.ndarray:
    """Wealth per head; NaN where the population is empty."""
    wealth = np.asarray(wealth, dtype=float)
    count = np.asarray(count, dtype=float)
    out = np.full(wealth.shape, np.nan)
    np.divide(wealth, count, out=out, where=count > 0)
    return out


def wealth_report(columns: dict, traders=None, initial_ids=None, initial_wealth=None) -> dict:
    """Per-population wealth-per-capita series plus miner-level end-of-run figures.

    ``columns`` maps record field names to per-step arrays.  When the final
    trader table is given, also reports each initial miner's wealth ratio
    ``A_i(T)/A_i(0)``, the (gamma_i, ratio) scatter and the correlation of
    final miner wealth with hashing capability.
    """
    series = {
        name: per_capita(columns[f"wealth_{name}"], columns[f"n_{name}"])
        for name in POPULATION_NAMES
    }
    report = {
        "per_capita": {k: v.tolist() for k, v in series.items()},
        "per_capita_start": {k: _nan_none(v[0]) for k, v in series.items()},
        "per_capita_end": {k: _nan_none(v[-1]) for k, v in series.items()},
    }
    if traders is None:
        return report
    from .population import Population

    price = float(columns["close"][-1])
    miners = traders.members(Population.MINER)
    final = traders.cash[miners] + traders.btc[miners] * price
    report["miner_wealth_hash_correlation"] = _safe_pearson(final, traders.hash[miners])
    if initial_ids is not None and initial_wealth is not None:
        ids = np.asarray(initial_ids)
        first = ids[traders.population[ids] == Population.MINER]
        a0 = np.asarray(initial_wealth)[first]
        a_t = traders.cash[first] + traders.btc[first] * price
        ratio = a_t / a0
        count = traders.gamma1_count[first]
        gamma = np.divide(traders.gamma1_sum[first], count, out=np.full(first.shape, np.nan),
                          where=count > 0)
        report["initial_miner_ratio"] = ratio.tolist()
        report["initial_miner_gamma"] = [_nan_none(g) for g in gamma]
        ok = ~np.isnan(gamma)
        report["gamma_ratio_correlation"] = _safe_pearson(gamma[ok], ratio[ok])
    return report


def _safe_pearson(x, y):
    try:
        return pearson(x, y)
    except ValueError:
        return None


def _nan_none(x):
    x = float(x)
    return None if math.isnan(x) else x
