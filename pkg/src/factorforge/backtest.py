"""Walk-forward portfolio backtest.

Windows are laid out on the continuous calendar-month grid spanned by the
panel: each window trains on `train_months` consecutive months, tests on the
next `test_months`, and the start advances by `test_months`.  Per window the
model is refit, stocks are ranked by predicted return, and the top `top_k`
form an equal-weight portfolio whose realized mean return is compared with
the all-stock mean benchmark.

Determinism: ranking ties break toward the lower permno, per-stock means are
aggregated in ascending permno order (so a portfolio holding the whole
universe equals the benchmark bit for bit), and each window's model seed is
derived from the configured seed and the window index.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from factorforge.models import fit_gradient_boosting, fit_random_forest
from factorforge.models.ensembles import BoostConfig, ForestConfig
from factorforge.rng import derive_seed

__all__ = [
    "BacktestConfig",
    "BacktestReport",
    "PortfolioStats",
    "Window",
    "WindowResult",
    "make_windows",
    "portfolio_stats",
    "run_backtest",
]


@dataclass
class BacktestConfig:
    train_months: int = 36
    test_months: int = 1
    top_k: int = 100
    model: BoostConfig | ForestConfig = field(default_factory=BoostConfig)
    features: list[str] | None = None

    def __post_init__(self):
        if self.train_months < 1:
            raise ValueError("train_months must be >= 1")
        if self.test_months < 1:
            raise ValueError("test_months must be >= 1")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


@dataclass
class Window:
    index: int
    train_month_ids: list[int]
    test_month_ids: list[int]


def _month_id(dates) -> np.ndarray:
    idx = pd.DatetimeIndex(dates)
    return idx.year.to_numpy() * 12 + (idx.month.to_numpy() - 1)


def make_windows(dates, cfg: BacktestConfig) -> list[Window]:
    """Lay out rolling windows over the calendar months spanned by `dates`.

    Candidate windows advance by `test_months`; a candidate whose test span
    contains a month with no observations is skipped.  Emitted windows are
    numbered consecutively.
    """
    ids = _month_id(dates)
    if ids.size == 0:
        raise ValueError("no dates supplied")
    present = set(ids.tolist())
    first, last = min(present), max(present)
    available = last - first + 1
    required = cfg.train_months + cfg.test_months
    if available < required:
        raise ValueError(
            f"insufficient history: {required} calendar months required, "
            f"{available} available"
        )
    windows: list[Window] = []
    start = first
    while start + required - 1 <= last:
        train = list(range(start, start + cfg.train_months))
        test = list(range(start + cfg.train_months, start + required))
        if all(m in present for m in test):
            windows.append(Window(index=len(windows), train_month_ids=train, test_month_ids=test))
        start += cfg.test_months
    return windows


@dataclass
class WindowResult:
    index: int
    train_start: pd.Timestamp
    train_end: pd.Timestamp
    test_start: pd.Timestamp
    test_end: pd.Timestamp
    members: list[int]
    portfolio_return: float
    benchmark_return: float

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "train_start": str(self.train_start.date()),
            "train_end": str(self.train_end.date()),
            "test_start": str(self.test_start.date()),
            "test_end": str(self.test_end.date()),
            "members": list(self.members),
            "portfolio_return": self.portfolio_return,
            "benchmark_return": self.benchmark_return,
        }


@dataclass
class PortfolioStats:
    mean: float
    std: float | None
    sharpe: float | None
    cumulative: list[float]

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "sharpe": self.sharpe,
            "cumulative": list(self.cumulative),
        }


def portfolio_stats(returns) -> PortfolioStats:
    """Mean, sample std, sharpe = mean/std, and compounded cumulative series.

    With fewer than two observations, or zero dispersion, std and/or sharpe
    are undefined and reported as None.
    """
    r = np.asarray(returns, dtype=np.float64)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("returns must be a non-empty 1-D sequence")
    mean = float(np.mean(r))
    std = float(np.std(r, ddof=1)) if r.size >= 2 else None
    sharpe = mean / std if std is not None and std > 0.0 else None
    cumulative = []
    acc = 1.0
    for x in r:
        acc *= 1.0 + float(x)
        cumulative.append(acc - 1.0)
    return PortfolioStats(mean=mean, std=std, sharpe=sharpe, cumulative=cumulative)


@dataclass
class BacktestReport:
    windows: list[WindowResult]
    cumulative_portfolio: list[float]
    cumulative_benchmark: list[float]
    mean_return: float
    std_return: float | None
    sharpe: float | None
    benchmark_mean: float
    benchmark_std: float | None
    benchmark_sharpe: float | None

    def to_dict(self, config: BacktestConfig | None = None) -> dict:
        out: dict = {}
        if config is not None:
            model = config.model
            kind = "gradient_boosting" if isinstance(model, BoostConfig) else "random_forest"
            out["config"] = {
                "train_months": config.train_months,
                "test_months": config.test_months,
                "top_k": config.top_k,
                "model": {"kind": kind, **model.__dict__},
                "features": list(config.features or []),
            }
        out["windows"] = [w.to_dict() for w in self.windows]
        out["cumulative_portfolio"] = list(self.cumulative_portfolio)
        out["cumulative_benchmark"] = list(self.cumulative_benchmark)
        out["mean_return"] = self.mean_return
        out["std_return"] = self.std_return
        out["sharpe"] = self.sharpe
        out["benchmark_mean"] = self.benchmark_mean
        out["benchmark_std"] = self.benchmark_std
        out["benchmark_sharpe"] = self.benchmark_sharpe
        return out


def _fit(model_cfg, X, y):
    if isinstance(model_cfg, BoostConfig):
        return fit_gradient_boosting(X, y, model_cfg)
    if isinstance(model_cfg, ForestConfig):
        return fit_random_forest(X, y, model_cfg)
    raise TypeError(f"unsupported model config: {type(model_cfg).__name__}")


def run_backtest(fp: pd.DataFrame, cfg: BacktestConfig) -> BacktestReport:
    if not cfg.features:
        raise ValueError("feature list is empty")
    missing = [f for f in cfg.features if f not in fp.columns]
    if missing:
        raise ValueError(f"features missing from panel: {missing}")

    month = _month_id(fp["date"])
    dates = fp["date"].to_numpy()
    permno = fp["permno"].to_numpy()
    X_all = fp[list(cfg.features)].to_numpy(dtype=np.float64)
    y_all = fp["ret"].to_numpy(dtype=np.float64)

    results: list[WindowResult] = []
    for w in make_windows(fp["date"], cfg):
        train_mask = np.isin(month, w.train_month_ids)
        test_mask = np.isin(month, w.test_month_ids)
        if not train_mask.any():
            raise ValueError(f"window {w.index}: no training rows")
        train_dates = dates[train_mask]
        test_dates = dates[test_mask]
        if train_dates.max() >= test_dates.min():
            raise ValueError(f"window {w.index}: train span overlaps test span")

        seed = derive_seed(cfg.model.seed, w.index)
        model = _fit(replace(cfg.model, seed=seed), X_all[train_mask], y_all[train_mask])

        # one prediction per stock, from its first test row
        tp = permno[test_mask]
        td = dates[test_mask]
        tX = X_all[test_mask]
        ty = y_all[test_mask]
        stocks = np.unique(tp)
        first_rows = np.empty(stocks.shape[0], dtype=np.int64)
        realized = np.empty(stocks.shape[0])
        for si, s in enumerate(stocks):
            rows = np.nonzero(tp == s)[0]
            first_rows[si] = rows[np.argmin(td[rows])]
            realized[si] = float(np.mean(ty[rows]))
        preds = model.predict(tX[first_rows])

        # descending prediction, ties to the lower permno
        order = np.lexsort((stocks, -preds))
        members = stocks[order[: cfg.top_k]]
        member_mask = np.isin(stocks, members)  # ascending-permno aggregation
        portfolio_return = float(np.mean(realized[member_mask]))
        benchmark_return = float(np.mean(realized))

        results.append(
            WindowResult(
                index=w.index,
                train_start=pd.Timestamp(train_dates.min()),
                train_end=pd.Timestamp(train_dates.max()),
                test_start=pd.Timestamp(test_dates.min()),
                test_end=pd.Timestamp(test_dates.max()),
                members=[int(s) for s in members],
                portfolio_return=portfolio_return,
                benchmark_return=benchmark_return,
            )
        )

    if not results:
        raise ValueError("no windows produced any results")
    port = portfolio_stats([r.portfolio_return for r in results])
    bench = portfolio_stats([r.benchmark_return for r in results])
    return BacktestReport(
        windows=results,
        cumulative_portfolio=port.cumulative,
        cumulative_benchmark=bench.cumulative,
        mean_return=port.mean,
        std_return=port.std,
        sharpe=port.sharpe,
        benchmark_mean=bench.mean,
        benchmark_std=bench.std,
        benchmark_sharpe=bench.sharpe,
    )
