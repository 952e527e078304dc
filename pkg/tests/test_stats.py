import math

import numpy as np
import pytest

from factortilt.backtest import BacktestResult
from factortilt.errors import StatsError
from factortilt.factors import FactorMatrix
from factortilt.stats import (
    annualized_return,
    annualized_vol,
    deflated_sharpe,
    effective_n,
    expected_max_sharpe,
    factor_correlations,
    factor_redundancy,
    max_drawdown,
    newey_west_tstat,
    sharpe_ratio,
    top_k_concentration,
    turnover_adjusted_alpha,
)
from factortilt.synthetic import trading_days


def result_from(returns, turnover=(), strategy="x", start_idx=0, n_total=None):
    returns = np.asarray(returns, dtype=float)
    n_total = n_total or (start_idx + len(returns))
    days = trading_days(n_total).days
    dates = list(days[start_idx : start_idx + len(returns)])
    reb = [dates[0]] if len(dates) else []
    turnover = np.asarray(turnover if len(turnover) else [0.0], dtype=float)
    return BacktestResult(
        strategy=strategy,
        dates=dates,
        daily_returns=returns,
        equity_curve=np.cumprod(1 + returns),
        rebalance_dates=reb * len(turnover) if len(turnover) == 1 else list(dates[: len(turnover)]),
        turnover=turnover,
        costs=np.zeros_like(turnover),
        weights=[],
    )


class TestNeweyWest:
    def test_lag_zero_equals_classical_t(self):
        rng = np.random.default_rng(10)
        x = rng.normal(0.001, 0.01, 300)
        t, lag = newey_west_tstat(x, lag=0)
        sigma_pop = math.sqrt(np.mean((x - x.mean()) ** 2))
        classical = x.mean() / (sigma_pop / math.sqrt(len(x)))
        assert lag == 0
        assert t == pytest.approx(classical, abs=1e-12)

    def test_hand_series_against_direct_formula(self):
        x = np.array([0.01, -0.01, 0.02, 0.00, 0.01, -0.02, 0.01, 0.02])
        t, _ = newey_west_tstat(x, lag=1)
        n = len(x)
        xc = x - x.mean()
        gamma0 = float(np.sum(xc * xc)) / n
        gamma1 = float(np.sum(xc[1:] * xc[:-1])) / n
        lrv = gamma0 + 2.0 * (1.0 - 1.0 / 2.0) * gamma1
        expected = x.mean() / math.sqrt(lrv / n)
        assert t == pytest.approx(expected, abs=1e-12)

    def test_scale_invariance(self):
        rng = np.random.default_rng(11)
        x = rng.normal(0.0005, 0.01, 120)
        t1, _ = newey_west_tstat(x)
        t2, _ = newey_west_tstat(100.0 * x)
        assert t1 == pytest.approx(t2, abs=1e-10)

    def test_automatic_lag_rule(self):
        x = np.random.default_rng(12).normal(size=300)
        _, lag = newey_west_tstat(x)
        assert lag == math.floor(4 * (300 / 100) ** (2 / 9))

    def test_short_series_errors(self):
        with pytest.raises(StatsError):
            newey_west_tstat(np.ones(5) * 0.01 * np.arange(5))

    def test_zero_variance_errors(self):
        with pytest.raises(StatsError):
            newey_west_tstat(np.full(50, 0.01))


class TestDeflatedSharpe:
    def test_zero_sharpe_single_trial_is_half(self):
        x = np.tile([0.01, -0.01], 4)
        assert deflated_sharpe(x, n_trials=1) == 0.5

    def test_non_increasing_in_trials(self):
        rng = np.random.default_rng(13)
        x = rng.normal(0.0005, 0.01, 500)
        values = [deflated_sharpe(x, n) for n in (1, 2, 5, 20, 100, 1000)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_bounded_probability(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            x = rng.normal(rng.uniform(-0.001, 0.002), 0.01, 250)
            assert 0.0 <= deflated_sharpe(x, 10) <= 1.0

    def test_monotone_in_observed_sharpe(self):
        rng = np.random.default_rng(15)
        noise = rng.normal(0, 0.01, 400)
        values = [deflated_sharpe(noise + mu, 10) for mu in (0.0, 0.0002, 0.0005, 0.001)]
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_benchmark_shifts_single_trial(self):
        rng = np.random.default_rng(16)
        x = rng.normal(0.0008, 0.01, 300)
        assert deflated_sharpe(x, 1, benchmark_sr=0.0) > deflated_sharpe(x, 1, benchmark_sr=0.05)

    def test_expected_max_monotone(self):
        vals = [expected_max_sharpe(n, 252) for n in (1, 2, 5, 20, 100)]
        assert vals[0] == 0.0
        assert all(a < b for a, b in zip(vals, vals[1:]))


class TestTurnoverAdjustedAlpha:
    def test_hand_division(self):
        n = 252
        r_s = np.full(n, (1.07) ** (1 / 252) - 1)   # ~7%/yr
        r_b = np.full(n, (1.05) ** (1 / 252) - 1)   # ~5%/yr
        strat = result_from(r_s, turnover=[0.25, 0.25])
        bench = result_from(r_b)
        taa = turnover_adjusted_alpha(strat, bench)
        assert taa == pytest.approx(0.02 / 0.5, rel=1e-9)

    def test_strategy_equals_benchmark(self):
        r = np.random.default_rng(17).normal(0.0005, 0.01, 100)
        a = result_from(r, turnover=[0.3])
        b = result_from(r.copy())
        assert turnover_adjusted_alpha(a, b) == 0.0

    def test_zero_turnover_positive_excess_is_inf(self):
        r_s = np.full(50, 0.001)
        r_b = np.full(50, 0.0005)
        strat = result_from(r_s, turnover=[0.0])
        bench = result_from(r_b)
        assert turnover_adjusted_alpha(strat, bench) == math.inf

    def test_disjoint_ranges_error(self):
        a = result_from(np.full(20, 0.001), n_total=100)
        b = result_from(np.full(20, 0.001), start_idx=50, n_total=100)
        with pytest.raises(StatsError, match="disjoint"):
            turnover_adjusted_alpha(a, b)


class TestMaxDrawdown:
    def test_monotone_increasing(self):
        assert max_drawdown([1.0, 1.1, 1.2, 1.3]) == 0.0

    def test_hand_case(self):
        assert max_drawdown([1.0, 1.2, 0.9, 1.1]) == pytest.approx(0.9 / 1.2 - 1)
        assert max_drawdown([1.0, 1.2, 0.9, 1.1]) == pytest.approx(-0.25)

    def test_second_trough_dominates(self):
        assert max_drawdown([1.0, 0.5, 1.0, 0.4]) == pytest.approx(-0.6)


class TestConcentration:
    def test_effective_n_pairs(self):
        assert effective_n([0.5, 0.5]) == 2.0
        assert effective_n([1.0, 0.0]) == 1.0
        assert effective_n([0.5, 0.25, 0.25]) == pytest.approx(1 / 0.375)

    def test_effective_n_exact_for_uniform(self):
        for n in (1, 2, 4, 8, 16, 32, 64):
            assert effective_n(np.full(n, 1.0 / n)) == n

    def test_effective_n_range(self):
        rng = np.random.default_rng(22)
        for _ in range(25):
            w = rng.dirichlet(np.ones(int(rng.integers(2, 12))))
            e = effective_n(w)
            assert 1.0 - 1e-12 <= e <= len(w) + 1e-9

    def test_all_zero_errors(self):
        with pytest.raises(StatsError):
            effective_n([0.0, 0.0])

    def test_top_k(self):
        assert top_k_concentration(np.full(10, 0.1), 5) == pytest.approx(0.5)
        assert top_k_concentration([0.6, 0.3, 0.1], 5) == pytest.approx(1.0)
        assert top_k_concentration([0.4, 0.3, 0.2, 0.05, 0.03, 0.02], 5) == pytest.approx(0.98)


def matrix(t, z):
    z = np.asarray(z, dtype=float)
    return FactorMatrix(
        t=t, assets=tuple(f"A{i}" for i in range(z.shape[0])), raw=z.copy(), z=z
    )


class TestFactorRedundancy:
    def test_duplicated_factor_has_unit_correlation(self):
        rng = np.random.default_rng(18)
        mats = []
        for i in range(4):
            col = rng.normal(size=12)
            z = np.column_stack([col, col, rng.normal(size=12)])
            mats.append(matrix(f"2020-0{i + 1}-01", z))
        factors, corr = factor_correlations(mats)
        i, j = factors.index("MOM"), factors.index("VAL")
        assert corr[i, j] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diag(corr) == 1.0)

    def test_independent_columns_have_small_average(self):
        rng = np.random.default_rng(19)
        mats = [matrix(f"2020-{m:02d}-01", rng.normal(size=(100, 3))) for m in range(1, 13)]
        _, corr = factor_correlations(mats)
        off = corr[~np.eye(3, dtype=bool)]
        assert np.all(np.abs(off) < 0.1)

    def test_constant_columns_give_nan(self):
        mats = [
            matrix("2020-01-01", np.column_stack([np.zeros(6), np.arange(6.0), np.arange(6.0) ** 2])),
            matrix("2020-07-01", np.column_stack([np.zeros(6), np.ones(6), np.arange(6.0)])),
        ]
        factors, corr = factor_correlations(mats)
        i, j = factors.index("MOM"), factors.index("VAL")
        assert math.isnan(corr[i, j])

    def test_marginal_sharpe_from_results(self):
        rng = np.random.default_rng(20)
        mats = [matrix(f"2020-0{i + 1}-01", rng.normal(size=(8, 3))) for i in range(3)]
        full = result_from(rng.normal(0.001, 0.01, 200))
        drops = {f"drop_{f}": result_from(rng.normal(0.0005, 0.01, 200)) for f in ("MOM", "VAL", "QUAL")}
        factors, _, marginal = factor_redundancy(mats, {"full": full, **drops})
        for f in factors:
            expected = sharpe_ratio(full.daily_returns) - sharpe_ratio(drops[f"drop_{f}"].daily_returns)
            assert marginal[f] == pytest.approx(expected, abs=1e-12)


def test_annualization_consistency():
    rng = np.random.default_rng(21)
    r = rng.normal(0.0004, 0.012, 756)
    vol = annualized_vol(r)
    ret = annualized_return(r)
    sigma_pop = math.sqrt(np.mean((r - r.mean()) ** 2))
    assert vol == pytest.approx(sigma_pop * math.sqrt(252), abs=1e-12)
    assert ret == pytest.approx(float(np.prod(1 + r)) ** (252 / len(r)) - 1, abs=1e-12)
    assert sharpe_ratio(r) == pytest.approx(r.mean() / sigma_pop * math.sqrt(252), abs=1e-12)
