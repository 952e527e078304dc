"""Cross-sectional factor signals: momentum, value (book-to-market), and a
profitability/balance-sheet quality composite, plus winsorization and
z-score standardization.

Conventions: signal offsets are in trading days; standard deviations are
population (divide by N); missing raw signals map to neutral z = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date as _date

import numpy as np

from .eligibility import EligibilitySet
from .errors import ConfigError
from .market_data import FundamentalRecord, MarketPanel

FACTORS = ("MOM", "VAL", "QUAL")


@dataclass(frozen=True)
class FactorParams:
    l_mom: int = 252
    skip: int = 21
    l_fund: int = 400  # staleness limit, calendar days
    winsor_p: float = 0.01
    winsorize_quality_components: bool = False

    def __post_init__(self):
        if self.l_mom < 1:
            raise ConfigError(f"l_mom must be >= 1, got {self.l_mom}")
        if self.skip < 0:
            raise ConfigError(f"skip must be >= 0, got {self.skip}")
        if self.l_fund < 1:
            raise ConfigError(f"l_fund must be >= 1, got {self.l_fund}")
        if not 0 <= self.winsor_p < 0.5:
            raise ConfigError(f"winsor_p must be in [0, 0.5), got {self.winsor_p}")


@dataclass(frozen=True)
class FactorMatrix:
    """Per-rebalance raw and standardized signals over the eligible universe.

    raw is (n_members, n_factors) with NaN for missing; z has the same shape
    and is complete (neutral zeros where raw is missing)."""

    t: str
    assets: tuple[str, ...]
    raw: np.ndarray
    z: np.ndarray
    factors: tuple[str, ...] = FACTORS

    def column(self, factor: str, standardized: bool = True) -> np.ndarray:
        j = self.factors.index(factor)
        return (self.z if standardized else self.raw)[:, j]


def momentum_signal(panel: MarketPanel, asset: str, t: str, l_mom: int, skip: int) -> float:
    """Trailing return P[t-skip] / P[t-l_mom-skip] - 1 in trading-day offsets."""
    it = panel.calendar.position(t)
    ai = panel.position(asset)
    i1 = it - skip
    i0 = it - l_mom - skip
    if i0 < 0 or i1 < 0:
        return math.nan
    p1 = panel.price[i1, ai]
    p0 = panel.price[i0, ai]
    if not (np.isfinite(p0) and np.isfinite(p1)):
        return math.nan
    return float(p1 / p0 - 1.0)


def _latest_record(panel: MarketPanel, asset: str, t: str, l_fund: int) -> FundamentalRecord | None:
    """Most recent fundamental record dated strictly before t and no older
    than l_fund calendar days at t."""
    records = panel.fundamentals.get(asset)
    if not records:
        return None
    t_date = _date.fromisoformat(t)
    for rec in reversed(records):
        if rec.report_date >= t:
            continue
        age = (t_date - _date.fromisoformat(rec.report_date)).days
        if age > l_fund:
            return None
        return rec
    return None


def value_signal(panel: MarketPanel, asset: str, t: str, l_fund: int) -> float:
    """Book-to-market: latest qualifying book equity over mktcap at t-1.

    Missing when there is no fresh report, book equity is absent or
    non-positive (a negative ratio is not rankable), or mktcap is missing.
    """
    it = panel.calendar.position(t)
    if it == 0:
        return math.nan
    rec = _latest_record(panel, asset, t, l_fund)
    if rec is None or math.isnan(rec.book_equity) or rec.book_equity <= 0:
        return math.nan
    mc = panel.mktcap[it - 1, panel.position(asset)]
    if not np.isfinite(mc):
        return math.nan
    return float(rec.book_equity / mc)


def quality_signal(
    panel: MarketPanel,
    universe: EligibilitySet,
    t: str,
    l_fund: int,
    winsorize_components_p: float | None = None,
) -> dict[str, float]:
    """Composite z(ROE) + z(GrossMargin) + z(-DebtToAssets) within the universe.

    Each component z-score is computed over the members where that component
    is available; the composite requires all three and is NaN otherwise.
    """
    members = universe.members
    n = len(members)
    roe = np.full(n, np.nan)
    gm = np.full(n, np.nan)
    neg_dta = np.full(n, np.nan)
    for i, asset in enumerate(members):
        rec = _latest_record(panel, asset, t, l_fund)
        if rec is None:
            continue
        roe[i] = rec.roe
        gm[i] = rec.gross_margin
        neg_dta[i] = -rec.debt_to_assets
    have_all = np.isfinite(roe) & np.isfinite(gm) & np.isfinite(neg_dta)
    if winsorize_components_p is not None:
        roe = winsorize(roe, winsorize_components_p)
        gm = winsorize(gm, winsorize_components_p)
        neg_dta = winsorize(neg_dta, winsorize_components_p)
    composite = standardize(roe) + standardize(gm) + standardize(neg_dta)
    out = {}
    for i, asset in enumerate(members):
        out[asset] = float(composite[i]) if have_all[i] else math.nan
    return out


def winsorize(values, p: float) -> np.ndarray:
    """Clamp non-missing values to the [p, 1-p] empirical quantiles
    (linear-interpolation definition). Missing entries are untouched."""
    if not 0 <= p < 0.5:
        raise ConfigError(f"winsorization quantile must be in [0, 0.5), got {p}")
    arr = np.asarray(values, dtype=float).copy()
    finite = np.isfinite(arr)
    if p == 0 or not finite.any():
        return arr
    lo = np.quantile(arr[finite], p)
    hi = np.quantile(arr[finite], 1.0 - p)
    arr[finite] = np.clip(arr[finite], lo, hi)
    return arr


def standardize(values) -> np.ndarray:
    """Cross-sectional z-scores with population moments over non-missing
    entries; zeros everywhere when the spread is zero, and zero for missing
    entries (neutral exposure)."""
    arr = np.asarray(values, dtype=float)
    z = np.zeros(arr.shape, dtype=float)
    finite = np.isfinite(arr)
    if not finite.any():
        return z
    x = arr[finite]
    if np.all(x == x[0]):  # exact constant cross-section, not just sigma ~ 0
        return z
    mu = float(np.mean(x))
    sigma = float(np.sqrt(np.mean((x - mu) ** 2)))
    if sigma > 0:
        z[finite] = (x - mu) / sigma
    return z


def build_factor_matrix(
    panel: MarketPanel, universe: EligibilitySet, t: str, params: FactorParams
) -> FactorMatrix:
    """Raw signals per factor over the universe, then winsorize and
    standardize each factor column independently."""
    members = universe.members
    if not members:
        raise ConfigError(f"cannot build factor matrix for empty universe at {t}")
    n = len(members)
    raw = np.full((n, len(FACTORS)), np.nan)
    for i, asset in enumerate(members):
        raw[i, 0] = momentum_signal(panel, asset, t, params.l_mom, params.skip)
        raw[i, 1] = value_signal(panel, asset, t, params.l_fund)
    qual = quality_signal(
        panel,
        universe,
        t,
        params.l_fund,
        winsorize_components_p=params.winsor_p if params.winsorize_quality_components else None,
    )
    for i, asset in enumerate(members):
        raw[i, 2] = qual[asset]
    z = np.empty_like(raw)
    for j in range(len(FACTORS)):
        z[:, j] = standardize(winsorize(raw[:, j], params.winsor_p))
    return FactorMatrix(t=t, assets=members, raw=raw, z=z)
