"""Eligible-universe construction from lagged history and liquidity screens."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import ConfigError
from .market_data import MarketPanel, average_dollar_volume, history_length


@dataclass(frozen=True)
class EligibilityParams:
    """Inclusion screens: minimum history (trading days), minimum average
    dollar volume, and the ADV lookback window."""

    h_min: int = 252
    adv_min: float = 1_000_000.0
    l_adv: int = 63

    def __post_init__(self):
        if self.h_min < 0:
            raise ConfigError(f"h_min must be >= 0, got {self.h_min}")
        if self.adv_min < 0:
            raise ConfigError(f"adv_min must be >= 0, got {self.adv_min}")
        if self.l_adv < 1:
            raise ConfigError(f"l_adv must be >= 1, got {self.l_adv}")


class ScreenValues(NamedTuple):
    history: int
    adv: float


@dataclass(frozen=True)
class EligibilitySet:
    """Assets passing the screens at rebalance date t, with the screen values
    that produced the decision for every asset in the panel."""

    t: str
    members: tuple[str, ...]
    screen_values: dict[str, ScreenValues] = field(default_factory=dict)
    assets: tuple[str, ...] = ()

    def __post_init__(self):
        if self.assets and not set(self.members) <= set(self.assets):
            raise ConfigError("universe members not a subset of panel assets")

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, asset: str) -> bool:
        return asset in set(self.members)


def compute_eligibility(panel: MarketPanel, t: str, params: EligibilityParams) -> EligibilitySet:
    """Members are assets with history >= h_min and ADV >= adv_min, both
    measured strictly before t. Missing ADV never passes. An empty result is
    legitimate, not an error."""
    members = []
    screen_values = {}
    for asset in panel.assets:
        hist = history_length(panel, asset, t)
        adv = average_dollar_volume(panel, asset, t, params.l_adv)
        screen_values[asset] = ScreenValues(hist, adv)
        if hist >= params.h_min and not math.isnan(adv) and adv >= params.adv_min:
            members.append(asset)
    return EligibilitySet(
        t=t,
        members=tuple(members),
        screen_values=screen_values,
        assets=tuple(panel.assets),
    )
