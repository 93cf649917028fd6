"""Deterministic synthetic panel generator.

Produces schema-exact prices and membership CSVs so the whole pipeline can
run without licensed data.  Prices follow per-stock geometric random walks;
when ``signal_strength`` > 0 the return stream carries a bounded nonlinear
component driven by lagged momentum and lagged realized volatility, giving
models genuine (but modest) out-of-sample structure to find.

Every value derives from the seed through counter-based streams keyed by
stock index, so output is byte-identical across runs and unchanged for
stock i when more stocks are appended.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from factorforge.rng import Xoshiro256StarStar, derive_seed

__all__ = ["SynthConfig", "generate", "inject_leak", "write_files"]

_START = "2015-01-31"
_LEAK_STREAM = 0x1EAC  # stream index reserved for the leak column


@dataclass
class SynthConfig:
    n_stocks: int = 50
    n_months: int = 48
    seed: int = 42
    signal_strength: float = 0.5
    leak_features: bool = False

    def __post_init__(self):
        if self.n_stocks < 2:
            raise ValueError("n_stocks must be >= 2")
        if self.n_months < 2:
            raise ValueError("n_months must be >= 2")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise ValueError("signal_strength must lie in [0, 1]")


def _gauss(rng: Xoshiro256StarStar) -> float:
    # Box-Muller, no caching: two uniforms per draw keeps the stream layout obvious
    u1 = 1.0 - rng.next_float()  # (0, 1], log-safe
    u2 = rng.next_float()
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def _stock_path(rng: Xoshiro256StarStar, n_months: int, strength: float):
    sigma = 0.02 * math.exp(0.4 * _gauss(rng))
    p0 = 20.0 * math.exp(0.5 * _gauss(rng))
    shrout = float(max(1, round(8000.0 * math.exp(0.6 * _gauss(rng)))))

    prices = [p0]
    raw_rets = [0.0]
    vols = [float(max(1, round(50000.0 * math.exp(0.8 * _gauss(rng)))))]
    for t in range(1, n_months):
        if t >= 5:
            momentum = prices[t - 1] / prices[t - 5] - 1.0
        else:
            momentum = 0.0
        window = raw_rets[max(1, t - 6) : t]
        if len(window) >= 2:
            mu = sum(window) / len(window)
            lagged_vol = math.sqrt(
                sum((x - mu) ** 2 for x in window) / (len(window) - 1)
            )
        else:
            lagged_vol = 0.02
        signal = 0.03 * math.tanh(5.0 * momentum) * math.exp(-((lagged_vol / 0.03) ** 2))
        r = strength * signal + sigma * _gauss(rng)
        r = max(-0.6, min(0.6, r))
        raw_rets.append(r)
        prices.append(prices[t - 1] * (1.0 + r))
        vols.append(float(max(1, round(50000.0 * math.exp(0.8 * _gauss(rng))))))
    return prices, vols, shrout


def generate(cfg: SynthConfig) -> tuple[str, str]:
    """Render the prices and membership CSVs as text."""
    dates = [str(d.date()) for d in pd.date_range(_START, periods=cfg.n_months, freq="ME")]
    price_lines = ["permno,date,prc,ret,vol,shrout"]
    member_lines = ["permno,start_date,end_date"]
    for i in range(cfg.n_stocks):
        permno = i + 1
        rng = Xoshiro256StarStar(derive_seed(cfg.seed, i))
        prices, vols, shrout = _stock_path(rng, cfg.n_months, cfg.signal_strength)
        for t in range(cfg.n_months):
            # the emitted return is recomputed from the emitted prices so the
            # price-return identity survives the round trip exactly
            ret = 0.0 if t == 0 else prices[t] / prices[t - 1] - 1.0
            price_lines.append(
                f"{permno},{dates[t]},{prices[t]!r},{ret!r},{vols[t]!r},{shrout!r}"
            )
        end = "" if permno % 2 == 0 else dates[-1]  # blank end ⇒ open membership
        member_lines.append(f"{permno},{dates[0]},{end}")
    return "\n".join(price_lines) + "\n", "\n".join(member_lines) + "\n"


def write_files(cfg: SynthConfig, prices_path, membership_path) -> None:
    prices, membership = generate(cfg)
    with open(prices_path, "w") as fh:
        fh.write(prices)
    with open(membership_path, "w") as fh:
        fh.write(membership)


def inject_leak(fp: pd.DataFrame, seed: int, scale: float = 1e-6) -> pd.DataFrame:
    """Append a ``LeakFeature`` column equal to the target plus tiny noise.

    Used by pipelines run with ``leak_features`` on, to plant a feature the
    first selection layer must catch.
    """
    rng = Xoshiro256StarStar(derive_seed(seed, _LEAK_STREAM))
    noise = np.array([_gauss(rng) for _ in range(len(fp))])
    out = fp.copy()
    out["LeakFeature"] = out["ret"].to_numpy(dtype=np.float64) + scale * noise
    return out
