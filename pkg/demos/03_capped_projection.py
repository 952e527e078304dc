"""Liquidity-weighted caps and the cap-and-redistribute projection.

Small-cap universes need per-asset weight ceilings tied to tradable volume.
Caps scale with each asset's dollar volume relative to the universe median;
breaching weight is clipped and handed proportionally to the uncapped rest,
repeating until every cap holds.
"""

import numpy as np

from factortilt import CapParams, InfeasibleCapsError, WeightVector, cap_and_redistribute
from factortilt.eligibility import EligibilitySet, ScreenValues
from factortilt.weighting import liquidity_caps

assets = ("thin", "small", "mid", "large", "mega")
advs = {"thin": 0.2e6, "small": 0.8e6, "mid": 2e6, "large": 8e6, "mega": 40e6}
universe = EligibilitySet(
    t="2021-07-01",
    members=assets,
    screen_values={a: ScreenValues(500, advs[a]) for a in assets},
    assets=assets,
)

params = CapParams(c_max=0.35, kappa=0.25, gamma=0.5)
caps = liquidity_caps(universe, advs, params)
print("cap_i = min(c_max, kappa * (ADV_i / median ADV)^gamma):")
for a in assets:
    print(f"  {a:>6}: ADV={advs[a] / 1e6:5.1f}M  cap={caps[a]:.3f}")

raw = WeightVector(t="2021-07-01", assets=assets, w=np.array([0.30, 0.25, 0.20, 0.15, 0.10]))
print(f"\nraw tilted weights:      {np.round(raw.w, 4)}")
projected = cap_and_redistribute(raw, caps, params)
print(f"after cap/redistribute:  {np.round(projected.w, 4)}")
print(f"caps respected: {bool(np.all(projected.w <= [caps[a] + params.epsilon for a in assets]))}")
print(f"still fully invested: sum = {projected.w.sum():.12f}")

ratio_before = raw.w[3] / raw.w[4]
ratio_after = projected.w[3] / projected.w[4]
print(f"never-capped assets keep proportions: {ratio_before:.4f} -> {ratio_after:.4f}")

print("\ncaps that cannot hold a full allocation are rejected up front:")
tight = {a: 0.15 for a in assets}  # sums to 0.75 < 1
try:
    cap_and_redistribute(raw, tight, params)
except InfeasibleCapsError as exc:
    print(f"  InfeasibleCapsError: {exc}")
