"""Portfolio evolution through time: piecewise-constant target weights,
daily returns, one-way turnover, linear transaction costs, and the
counterfactual baseline strategies run on identical data and schedule.

Conventions: turnover is one-way sum |dw| in [0, 2]; the cost
cost_rate * turnover is deducted from the rebalance day's return. A missing
asset return contributes zero and the position is carried. An empty universe
holds cash at exactly zero return until the next rebalance.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .eligibility import EligibilityParams, EligibilitySet, compute_eligibility
from .errors import ConfigError, DataError
from .factors import FactorParams, build_factor_matrix, momentum_signal, value_signal, _latest_record
from .market_data import MarketPanel, RebalanceSchedule
from .weighting import CapParams, TiltParams, WeightVector, build_weights, equal_weight_baseline

log = logging.getLogger(__name__)

STRATEGIES = ("dmft", "fixed_universe", "ew_eligible", "ew_all", "cap_weighted")
WEIGHT_MODES = ("constant_mix", "drift")


@dataclass(frozen=True)
class BacktestConfig:
    strategy: str = "dmft"
    cost_rate: float = 0.0
    weight_mode: str = "constant_mix"
    eligibility: EligibilityParams = field(default_factory=EligibilityParams)
    factors: FactorParams = field(default_factory=FactorParams)
    tilt: TiltParams = field(default_factory=TiltParams)
    caps: CapParams | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}, expected one of {STRATEGIES}")
        if self.cost_rate < 0:
            raise ConfigError(f"cost_rate must be >= 0, got {self.cost_rate}")
        if self.weight_mode not in WEIGHT_MODES:
            raise ConfigError(f"unknown weight_mode {self.weight_mode!r}")


@dataclass
class BacktestResult:
    strategy: str
    dates: list[str]
    daily_returns: np.ndarray
    equity_curve: np.ndarray
    rebalance_dates: list[str]
    turnover: np.ndarray
    costs: np.ndarray
    weights: list[WeightVector]


def _signal_universe(panel: MarketPanel, t: str, params: FactorParams) -> EligibilitySet:
    """No-screen universe: every asset with at least one computable raw
    signal at t (momentum prices in place, or a fresh fundamental report with
    the needed fields plus mktcap for value)."""
    members = []
    for asset in panel.assets:
        mom_ok = not np.isnan(momentum_signal(panel, asset, t, params.l_mom, params.skip))
        val_ok = not np.isnan(value_signal(panel, asset, t, params.l_fund))
        rec = _latest_record(panel, asset, t, params.l_fund)
        qual_ok = rec is not None and not (
            np.isnan(rec.roe) or np.isnan(rec.gross_margin) or np.isnan(rec.debt_to_assets)
        )
        if mom_ok or val_ok or qual_ok:
            members.append(asset)
    return EligibilitySet(t=t, members=tuple(members), assets=tuple(panel.assets))


def _listed_universe(panel: MarketPanel, t: str) -> EligibilitySet:
    """Assets with at least one non-missing price strictly before t."""
    it = panel.calendar.position(t)
    listed = np.isfinite(panel.price[:it, :]).any(axis=0)
    members = tuple(a for a, ok in zip(panel.assets, listed) if ok)
    return EligibilitySet(t=t, members=members, assets=tuple(panel.assets))


def _capweight_universe(panel: MarketPanel, t: str) -> EligibilitySet:
    """Assets with a market cap observation at t-1."""
    it = panel.calendar.position(t)
    if it == 0:
        return EligibilitySet(t=t, members=(), assets=tuple(panel.assets))
    ok = np.isfinite(panel.mktcap[it - 1, :])
    members = tuple(a for a, m in zip(panel.assets, ok) if m)
    return EligibilitySet(t=t, members=members, assets=tuple(panel.assets))


def _cap_weighted_vector(panel: MarketPanel, universe: EligibilitySet, t: str) -> WeightVector:
    w = np.zeros(panel.n_assets)
    if universe.members:
        it = panel.calendar.position(t)
        for a in universe.members:
            w[panel.position(a)] = panel.mktcap[it - 1, panel.position(a)]
        w /= w.sum()
    return WeightVector(t=t, assets=tuple(panel.assets), w=w)


def target_weights(panel: MarketPanel, t: str, config: BacktestConfig) -> WeightVector:
    """Target weight vector for one strategy at one rebalance date."""
    s = config.strategy
    if s in ("dmft", "ew_eligible"):
        universe = compute_eligibility(panel, t, config.eligibility)
    elif s == "fixed_universe":
        universe = _signal_universe(panel, t, config.factors)
    elif s == "ew_all":
        universe = _listed_universe(panel, t)
    else:
        universe = _capweight_universe(panel, t)

    if not universe.members:
        log.warning("%s: empty universe at %s; holding cash until next rebalance", s, t)
        return WeightVector(t=t, assets=tuple(panel.assets), w=np.zeros(panel.n_assets))

    if s in ("ew_eligible", "ew_all"):
        return equal_weight_baseline(universe)
    if s == "cap_weighted":
        return _cap_weighted_vector(panel, universe, t)
    matrix = build_factor_matrix(panel, universe, t, config.factors)
    caps = config.caps if s == "dmft" else None
    return build_weights(panel, universe, matrix, config.tilt, caps, t)


def run_backtest(
    panel: MarketPanel,
    schedule: RebalanceSchedule,
    config: BacktestConfig,
    end: str | None = None,
) -> BacktestResult:
    """Evolve the configured strategy from the first rebalance date through
    `end` (panel end by default).

    Daily return on day d uses the weights held coming into d; on a rebalance
    date the book is then traded to the new targets and the turnover cost is
    deducted from that day's return. Between rebalances, constant_mix holds
    the targets fixed while drift lets weights evolve with relative returns
    (turnover is then measured against the drifted weights).
    """
    cal = panel.calendar
    for t in schedule.dates:
        if t not in cal:
            raise DataError(f"rebalance date {t} outside the panel calendar")
    end = cal.last_on_or_before(end) if end is not None else cal.days[-1]
    if end is None:
        raise DataError("backtest end precedes the panel calendar")
    i_end = cal.position(end)
    i_start = cal.position(schedule.dates[0])
    if i_end < i_start:
        raise ConfigError("backtest end precedes the first rebalance date")

    targets = {t: target_weights(panel, t, config) for t in schedule.dates if t <= end}

    with np.errstate(invalid="ignore", divide="ignore"):
        rets = panel.price[1:] / panel.price[:-1] - 1.0
    asset_returns = np.full_like(panel.price, np.nan)
    asset_returns[1:] = rets

    dates = list(cal.days[i_start : i_end + 1])
    daily = np.zeros(len(dates))
    reb_dates: list[str] = []
    turnover: list[float] = []
    costs: list[float] = []
    weights = [targets[t] for t in sorted(targets)]

    w = np.zeros(panel.n_assets)
    drift = config.weight_mode == "drift"
    for k, d in enumerate(dates):
        di = i_start + k
        r = asset_returns[di].copy()
        np.nan_to_num(r, copy=False)
        gross = float(w @ r)
        if drift and w.sum() > 0:
            grown = w * (1.0 + r)
            total = float(grown.sum())
            w_eod = grown / total if total > 0 else w
        else:
            w_eod = w
        if d in targets:
            tgt = targets[d].w
            to = float(np.abs(tgt - w_eod).sum())
            cost = config.cost_rate * to
            reb_dates.append(d)
            turnover.append(to)
            costs.append(cost)
            daily[k] = gross - cost
            w = tgt.copy()
        else:
            daily[k] = gross
            w = w_eod

    equity = np.cumprod(1.0 + daily)
    return BacktestResult(
        strategy=config.strategy,
        dates=dates,
        daily_returns=daily,
        equity_curve=equity,
        rebalance_dates=reb_dates,
        turnover=np.array(turnover),
        costs=np.array(costs),
        weights=weights,
    )


def run_baselines(
    panel: MarketPanel,
    schedule: RebalanceSchedule,
    config: BacktestConfig,
    end: str | None = None,
    threads: int = 1,
) -> dict[str, BacktestResult]:
    """Run the tilted strategy and all counterfactual baselines under
    identical data, schedule, and cost assumptions. Liquidity caps apply only
    to the screened tilted strategy (the screens guarantee ADV for every
    member; the unscreened pools do not)."""
    configs = {
        s: replace(config, strategy=s, caps=config.caps if s == "dmft" else None)
        for s in STRATEGIES
    }
    results: dict[str, BacktestResult] = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {s: pool.submit(run_backtest, panel, schedule, c, end) for s, c in configs.items()}
            for s in STRATEGIES:
                results[s] = futures[s].result()
    else:
        for s in STRATEGIES:
            results[s] = run_backtest(panel, schedule, configs[s], end)
    return results


def turnover_series(result: BacktestResult) -> tuple[list[str], np.ndarray, float]:
    """Per-rebalance one-way turnover plus the annualized aggregate
    sum(turnover) * 252 / days covered."""
    n_days = len(result.dates)
    if n_days == 0:
        raise ConfigError("empty backtest result")
    annualized = float(result.turnover.sum()) * 252.0 / n_days
    return list(result.rebalance_dates), result.turnover.copy(), annualized


def removal_config(config: BacktestConfig, factor: str) -> BacktestConfig:
    """Config with one factor removed from the mixture: remaining weights are
    renormalized proportionally, shared uniformly if they carried no weight,
    and removal of the last factor degenerates to the untilted baseline."""
    alpha = dict(config.tilt.alpha)
    if factor not in alpha:
        raise ConfigError(f"factor {factor!r} not in mixture")
    rest = [f for f in alpha if f != factor]
    if not rest:
        return replace(config, tilt=replace(config.tilt, lam=0.0))
    rest_total = sum(alpha[f] for f in rest)
    if rest_total > 0:
        new_alpha = {f: (alpha[f] / rest_total if f in rest else 0.0) for f in alpha}
    else:
        new_alpha = {f: (1.0 / len(rest) if f in rest else 0.0) for f in alpha}
    return replace(config, tilt=replace(config.tilt, alpha=new_alpha))


def run_factor_removals(
    panel: MarketPanel,
    schedule: RebalanceSchedule,
    config: BacktestConfig,
    end: str | None = None,
) -> dict[str, BacktestResult]:
    """Full run plus one rerun per factor with that factor removed, for
    marginal contribution diagnostics."""
    out = {"full": run_backtest(panel, schedule, config, end)}
    for f in config.tilt.alpha:
        out[f"drop_{f}"] = run_backtest(panel, schedule, removal_config(config, f), end)
    return out
