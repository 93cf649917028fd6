"""Engineered cross-sectional factors.

Everything here is computed per security: no window, lag, or fill ever
crosses a permno boundary, so factors for one security can be rebuilt in
isolation and match the full-panel result cell for cell.

The canonical catalog (``FACTOR_CATALOG``) fixes both the column set and the
column order used in every downstream artifact.  Two textually identical
volatility-turnover products exist upstream; a single ``VolatilityTurnover``
column represents both to avoid a perfectly collinear duplicate.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
import pandas as pd

__all__ = [
    "BASE_FACTORS",
    "FACTOR_CATALOG",
    "INTERACTION_FACTORS",
    "FactorConfig",
    "compute_base_factors",
    "compute_factors",
    "compute_interaction_factors",
    "finalize",
    "pct_change",
    "rolling_stat",
    "rsi",
]


@dataclass
class FactorConfig:
    momentum_lag: int = 4
    momentum_ma_window: int = 10
    long_ma_window: int = 20
    volatility_window: int = 20
    spread_window: int = 20
    rsi_window: int = 14
    smoothed_return_window: int = 10
    short_momentum_lag: int = 5
    long_momentum_lag: int = 20
    volatility_slope_lag: int = 1

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{f.name} must be an integer >= 1, got {v!r}")


BASE_FACTORS = (
    "MarketCap",
    "Momentum",
    "PriceReturn",
    "MomentumChange",
    "MomentumMA",
    "LogMarketCap",
    "AmihudIlliquidity",
    "TurnoverRatio",
    "RollingVolatility",
    "HighLowSpread",
    "RSI",
    "MovingAverage",
    "ShortMomentum",
    "LongMomentum",
)

INTERACTION_FACTORS = (
    "MomentumVsMarketCap",
    "VolatilityTurnover",
    "MomentumLiquidity",
    "MarketCapAdjMomentum",
    "MomentumMADeviation",
    "NormalizedHighLowSpread",
    "MomentumRSI",
    "SmoothedReturn",
    "VolatilityAdjustedReturn",
    "VolatilitySlope",
    "VolatilityDynamics",
    "LiquidityStress",
    "TrendStrength",
    "RiskAdjustedMomentum",
    "AbnormalBehavior",
    "MeanReversion",
    "MultiPeriodMomentum",
)

FACTOR_CATALOG = BASE_FACTORS + INTERACTION_FACTORS

KEY_COLUMNS = ("permno", "date", "ret")


def pct_change(series, lag: int) -> np.ndarray:
    """Fractional change over ``lag`` periods; missing during warm-up and on
    zero denominators."""
    if lag < 1:
        raise ValueError(f"lag must be >= 1, got {lag}")
    v = np.asarray(series, dtype=np.float64)
    out = np.full(v.shape[0], np.nan)
    if v.shape[0] <= lag:
        return out
    prev = v[:-lag]
    cur = v[lag:]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = cur / prev
    ratio[prev == 0.0] = np.nan
    out[lag:] = ratio - 1.0
    return out


def rolling_stat(series, window: int, stat: str) -> np.ndarray:
    """Full-window rolling mean, sample std, or min.

    Entries are missing until ``window`` observations are available, and any
    missing value inside a window makes the result missing (statistics never
    silently skip data).
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if stat not in ("mean", "std", "min"):
        raise ValueError(f"stat must be one of mean/std/min, got {stat!r}")
    v = np.asarray(series, dtype=np.float64)
    n = v.shape[0]
    out = np.full(n, np.nan)
    if n < window:
        return out
    wins = np.lib.stride_tricks.sliding_window_view(v, window)
    if stat == "mean":
        out[window - 1 :] = wins.mean(axis=1)
    elif stat == "min":
        out[window - 1 :] = wins.min(axis=1)
    else:
        if window == 1:
            return out  # sample std undefined for a single observation
        mu = wins.mean(axis=1)
        dev = wins - mu[:, None]
        out[window - 1 :] = np.sqrt((dev * dev).sum(axis=1) / (window - 1))
    return out


def rsi(prices, window: int) -> np.ndarray:
    """Relative strength index on simple rolling means of gains and losses.

    Conventions for degenerate windows: all-gain 100, all-loss 0, flat 50.
    Output lies in [0, 100] wherever defined; the first ``window`` entries
    are missing (one price change plus a full window of changes).
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    p = np.asarray(prices, dtype=np.float64)
    n = p.shape[0]
    out = np.full(n, np.nan)
    if n <= window:
        return out
    delta = p[1:] - p[:-1]
    gains = np.where(delta > 0, delta, 0.0)
    losses = np.where(delta < 0, -delta, 0.0)
    # NaN price changes must poison their windows, not be clipped away
    nan_mask = np.isnan(delta)
    gains[nan_mask] = np.nan
    losses[nan_mask] = np.nan
    gwins = np.lib.stride_tricks.sliding_window_view(gains, window)
    lwins = np.lib.stride_tricks.sliding_window_view(losses, window)
    avg_gain = gwins.mean(axis=1)
    avg_loss = lwins.mean(axis=1)
    vals = np.full(avg_gain.shape[0], np.nan)
    defined = ~(np.isnan(avg_gain) | np.isnan(avg_loss))
    both_zero = defined & (avg_gain == 0.0) & (avg_loss == 0.0)
    no_loss = defined & (avg_loss == 0.0) & (avg_gain > 0.0)
    no_gain = defined & (avg_gain == 0.0) & (avg_loss > 0.0)
    regular = defined & (avg_gain > 0.0) & (avg_loss > 0.0)
    vals[both_zero] = 50.0
    vals[no_loss] = 100.0
    vals[no_gain] = 0.0
    rs = avg_gain[regular] / avg_loss[regular]
    vals[regular] = 100.0 - 100.0 / (1.0 + rs)
    out[window:] = vals
    return out


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    if np.ndim(den):
        out[den == 0.0] = np.nan
    elif den == 0.0:
        out = np.full_like(np.asarray(num, dtype=np.float64), np.nan)
    return out


def _base_block(p, r, v, s, cfg: FactorConfig) -> dict[str, np.ndarray]:
    mcap = np.abs(p) * s
    momentum = pct_change(p, cfg.momentum_lag)
    price_ret = pct_change(p, 1)
    mom_change = np.full_like(momentum, np.nan)
    mom_change[1:] = momentum[1:] - momentum[:-1]
    dp = np.full_like(p, np.nan)
    dp[1:] = np.abs(p[1:] - p[:-1])
    return {
        "MarketCap": mcap,
        "Momentum": momentum,
        "PriceReturn": price_ret,
        "MomentumChange": mom_change,
        "MomentumMA": rolling_stat(momentum, cfg.momentum_ma_window, "mean"),
        "LogMarketCap": np.log1p(mcap),
        "AmihudIlliquidity": _safe_div(dp, v),
        "TurnoverRatio": _safe_div(v, s),
        "RollingVolatility": rolling_stat(r, cfg.volatility_window, "std"),
        "HighLowSpread": p - rolling_stat(p, cfg.spread_window, "min"),
        "RSI": rsi(p, cfg.rsi_window),
        "MovingAverage": rolling_stat(p, cfg.long_ma_window, "mean"),
        "ShortMomentum": pct_change(p, cfg.short_momentum_lag),
        "LongMomentum": pct_change(p, cfg.long_momentum_lag),
    }


def _interaction_block(p, b: dict[str, np.ndarray], cfg: FactorConfig) -> dict[str, np.ndarray]:
    k = cfg.volatility_slope_lag
    rv = b["RollingVolatility"]
    slope = np.full_like(rv, np.nan)
    slope[k:] = (rv[k:] - rv[:-k]) / k
    mom_ma_dev = b["Momentum"] - rolling_stat(b["Momentum"], cfg.long_ma_window, "mean")
    return {
        "MomentumVsMarketCap": b["Momentum"] * b["LogMarketCap"],
        "VolatilityTurnover": rv * b["TurnoverRatio"],
        "MomentumLiquidity": b["Momentum"] * b["AmihudIlliquidity"],
        "MarketCapAdjMomentum": _safe_div(b["Momentum"], b["MarketCap"]),
        "MomentumMADeviation": mom_ma_dev,
        "NormalizedHighLowSpread": _safe_div(b["HighLowSpread"], p),
        "MomentumRSI": b["Momentum"] * b["RSI"],
        "SmoothedReturn": rolling_stat(
            b["PriceReturn"], cfg.smoothed_return_window, "mean"
        ),
        "VolatilityAdjustedReturn": _safe_div(b["PriceReturn"], rv),
        "VolatilitySlope": slope,
        "VolatilityDynamics": rv * slope,
        "LiquidityStress": _safe_div(
            b["TurnoverRatio"] * np.abs(b["PriceReturn"]), b["MarketCap"]
        ),
        "TrendStrength": b["Momentum"] * mom_ma_dev * b["RSI"],
        "RiskAdjustedMomentum": _safe_div(b["Momentum"], rv * b["TurnoverRatio"]),
        "AbnormalBehavior": b["Momentum"] * b["HighLowSpread"]
        - b["RSI"] * b["AmihudIlliquidity"],
        "MeanReversion": _safe_div(p - b["MovingAverage"], rv),
        "MultiPeriodMomentum": b["ShortMomentum"] * b["LongMomentum"],
    }


def _per_permno(panel: pd.DataFrame, cfg: FactorConfig, columns) -> pd.DataFrame:
    keys = ["permno", "date", "ret"]
    if columns is BASE_FACTORS:
        keys.append("prc")  # carried so interactions can be appended later
    out = panel[keys].copy()
    n = len(panel)
    filled = {name: np.full(n, np.nan) for name in columns}
    for _, idx in panel.groupby("permno", sort=False).indices.items():
        sub = panel.iloc[idx]
        p = sub["prc"].to_numpy(dtype=np.float64)
        r = sub["ret"].to_numpy(dtype=np.float64)
        v = sub["vol"].to_numpy(dtype=np.float64)
        s = sub["shrout"].to_numpy(dtype=np.float64)
        values = _base_block(p, r, v, s, cfg)
        if columns is FACTOR_CATALOG:
            values.update(_interaction_block(p, values, cfg))
        for name in columns:
            filled[name][idx] = values[name]
    for name in columns:
        out[name] = filled[name]
    return out


def compute_base_factors(panel: pd.DataFrame, cfg: FactorConfig | None = None) -> pd.DataFrame:
    """Price/volume/shares factors per security; see module docstring."""
    cfg = cfg if cfg is not None else FactorConfig()
    return _per_permno(panel, cfg, BASE_FACTORS)


def compute_interaction_factors(fp: pd.DataFrame, cfg: FactorConfig | None = None) -> pd.DataFrame:
    """Append interaction columns to a base factor panel.

    Needs the raw price back for the price-relative interactions, so it
    recomputes per security from the merged keys; ``compute_factors`` is the
    usual one-call entry point.
    """
    cfg = cfg if cfg is not None else FactorConfig()
    missing = [c for c in BASE_FACTORS if c not in fp.columns]
    if missing:
        raise ValueError(f"base factors missing from panel: {missing}")
    if "prc" not in fp.columns:
        raise ValueError("interaction factors need the 'prc' column alongside the base factors")
    out = fp.copy()
    n = len(out)
    filled = {name: np.full(n, np.nan) for name in INTERACTION_FACTORS}
    for _, idx in out.groupby("permno", sort=False).indices.items():
        sub = out.iloc[idx]
        p = sub["prc"].to_numpy(dtype=np.float64)
        base = {name: sub[name].to_numpy(dtype=np.float64) for name in BASE_FACTORS}
        inter = _interaction_block(p, base, cfg)
        for name in INTERACTION_FACTORS:
            filled[name][idx] = inter[name]
    for name in INTERACTION_FACTORS:
        out[name] = filled[name]
    return out.drop(columns=["prc"])


def compute_factors(panel: pd.DataFrame, cfg: FactorConfig | None = None) -> pd.DataFrame:
    """Full catalog in one pass: base plus interactions, not yet finalized."""
    cfg = cfg if cfg is not None else FactorConfig()
    return _per_permno(panel, cfg, FACTOR_CATALOG)


def finalize(fp: pd.DataFrame) -> pd.DataFrame:
    """Resolve every non-finite factor cell: ∞ → missing, forward-fill per
    security, remaining gaps → 0.  After this, all factor cells are finite."""
    out = fp.copy()
    cols = [c for c in out.columns if c not in KEY_COLUMNS]
    block = out[cols].replace([np.inf, -np.inf], np.nan)
    out[cols] = block
    out[cols] = out.groupby("permno", sort=False)[cols].ffill()
    out[cols] = out[cols].fillna(0.0)
    return out
