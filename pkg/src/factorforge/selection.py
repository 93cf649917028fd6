"""Two-layer factor filtering and exhaustive subset search.

Layer 1 drops factors whose pooled correlation with the target is high
enough to indicate leakage.  Layer 2 walks factor pairs in catalog order and
breaks up highly correlated pairs, keeping the member more correlated with
the target.  The survivors feed an exhaustive fixed-size subset search
scored by a small random forest on a chronological holdout.

Everything is deterministic: pair order, tie-breaks, combination order, and
per-combination seeds are all fixed functions of the inputs, so reports are
byte-identical across runs and across worker counts.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from factorforge.factors import KEY_COLUMNS
from factorforge.models import evaluate, fit_random_forest
from factorforge.models.ensembles import ForestConfig

__all__ = [
    "SelectionConfig",
    "SelectionReport",
    "SubsetResult",
    "chronological_split",
    "factor_columns",
    "layer1_filter",
    "layer2_decorrelate",
    "pearson",
    "pearson_with_flag",
    "select_factors",
    "subset_search",
]


@dataclass
class SelectionConfig:
    target_corr_threshold: float = 0.1
    pairwise_corr_threshold: float = 0.75
    subset_size: int = 10
    split: float = 0.8
    combination_budget: int = 10000
    scoring: ForestConfig = field(default_factory=lambda: ForestConfig(n_estimators=25))

    def __post_init__(self):
        if not 0.0 < self.target_corr_threshold < 1.0:
            raise ValueError("target_corr_threshold must lie in (0, 1)")
        if not 0.0 < self.pairwise_corr_threshold < 1.0:
            raise ValueError("pairwise_corr_threshold must lie in (0, 1)")
        if self.subset_size < 1:
            raise ValueError("subset_size must be >= 1")
        if not 0.0 < self.split < 1.0:
            raise ValueError("split must lie in (0, 1)")
        if self.combination_budget < 1:
            raise ValueError("combination_budget must be >= 1")


def pearson_with_flag(x, y) -> tuple[float, bool]:
    """Pearson r over rows where both values are finite.

    Returns (r, degenerate).  Zero variance in either column, or fewer than
    two finite pairs, is reported as r = 0 with the degenerate flag set so
    callers can treat "no linear relationship measurable" uniformly.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    mask = np.isfinite(x) & np.isfinite(y)
    xs = x[mask]
    ys = y[mask]
    if xs.shape[0] < 2:
        return 0.0, True
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return 0.0, True
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r)), False


def pearson(x, y) -> float:
    return pearson_with_flag(x, y)[0]


def factor_columns(fp: pd.DataFrame) -> list[str]:
    return [c for c in fp.columns if c not in KEY_COLUMNS]


def _target_corrs(fp: pd.DataFrame, names) -> dict[str, tuple[float, bool]]:
    ret = fp["ret"].to_numpy(dtype=np.float64)
    return {f: pearson_with_flag(fp[f].to_numpy(dtype=np.float64), ret) for f in names}


def layer1_filter(fp: pd.DataFrame, cfg: SelectionConfig | None = None):
    """Drop factors with |corr(factor, ret)| above the leakage threshold.

    Returns (kept, dropped); dropped entries record the offending |corr|.
    Degenerate (constant) factors correlate 0 by convention and are kept.
    """
    cfg = cfg if cfg is not None else SelectionConfig()
    names = factor_columns(fp)
    corrs = _target_corrs(fp, names)
    kept: list[str] = []
    dropped: list[dict] = []
    for f in names:
        r, _ = corrs[f]
        if abs(r) > cfg.target_corr_threshold:
            dropped.append({"factor": f, "abs_target_corr": abs(r)})
        else:
            kept.append(f)
    return kept, dropped


def layer2_decorrelate(fp: pd.DataFrame, kept: list[str], cfg: SelectionConfig | None = None):
    """Break up factor pairs with |pearson| above the pairwise threshold.

    Pairs are visited in catalog order (i before j); the member with the
    smaller |corr(factor, ret)| is dropped, ties dropping the later one.
    A single ordered pass suffices: any pair both alive at the end was
    examined while both were alive, so no surviving pair can exceed the
    threshold.
    """
    cfg = cfg if cfg is not None else SelectionConfig()
    target = {f: r for f, (r, _) in _target_corrs(fp, kept).items()}
    cols = {f: fp[f].to_numpy(dtype=np.float64) for f in kept}
    alive = dict.fromkeys(kept, True)
    dropped: list[dict] = []
    for fi, fj in itertools.combinations(kept, 2):
        if not (alive[fi] and alive[fj]):
            continue
        r, _ = pearson_with_flag(cols[fi], cols[fj])
        if abs(r) <= cfg.pairwise_corr_threshold:
            continue
        # keep the member more correlated with the target; ties keep the earlier
        if abs(target[fi]) >= abs(target[fj]):
            winner, loser = fi, fj
        else:
            winner, loser = fj, fi
        alive[loser] = False
        dropped.append(
            {
                "factor": loser,
                "kept_partner": winner,
                "pair_corr": r,
                "dropped_target_corr": target[loser],
                "kept_target_corr": target[winner],
            }
        )
    low_corr = [f for f in kept if alive[f]]
    return low_corr, dropped


def chronological_split(fp: pd.DataFrame, fraction: float):
    """Boolean (train, test) row masks: the first `fraction` of pooled
    distinct dates train, the remainder test."""
    dates = np.unique(fp["date"].to_numpy())
    n_train = int(dates.shape[0] * fraction)
    if n_train < 1 or n_train >= dates.shape[0]:
        raise ValueError(
            f"split {fraction} leaves an empty side with {dates.shape[0]} distinct dates"
        )
    cutoff = dates[n_train - 1]
    train = (fp["date"].to_numpy() <= cutoff)
    return train, ~train


@dataclass
class SubsetResult:
    best_subset: list[str]
    best_score: float
    evaluated_count: int


def subset_search(
    fp: pd.DataFrame,
    low_corr_factors: list[str],
    cfg: SelectionConfig | None = None,
    threads: int = 1,
) -> SubsetResult:
    """Score every C(n, subset_size) combination and return the best.

    Combinations are enumerated lexicographically over the input order; each
    one trains the scoring forest (seed = base seed XOR combination index)
    on the chronological train rows and is scored by R² on the test rows.
    Ties keep the first combination in enumeration order.  Combination
    scoring runs on a thread pool; the reduction is order-fixed, so worker
    count never changes the result.
    """
    cfg = cfg if cfg is not None else SelectionConfig()
    if not low_corr_factors:
        raise ValueError("no factors to search over")
    n = len(low_corr_factors)
    k = cfg.subset_size
    if n <= k:
        combos = [tuple(low_corr_factors)]
    else:
        total = math.comb(n, k)
        if total > cfg.combination_budget:
            raise ValueError(
                f"{total} combinations of {k} from {n} factors exceeds the budget of "
                f"{cfg.combination_budget}; raise combination_budget or shrink the pool"
            )
        combos = list(itertools.combinations(low_corr_factors, k))

    train_mask, test_mask = chronological_split(fp, cfg.split)
    pos = {f: i for i, f in enumerate(low_corr_factors)}
    X_all = fp[low_corr_factors].to_numpy(dtype=np.float64)
    y = fp["ret"].to_numpy(dtype=np.float64)
    Xtr, ytr = X_all[train_mask], y[train_mask]
    Xte, yte = X_all[test_mask], y[test_mask]

    def score(indexed):
        i, names = indexed
        cols = [pos[f] for f in names]
        model_cfg = replace(cfg.scoring, seed=cfg.scoring.seed ^ i)
        model = fit_random_forest(Xtr[:, cols], ytr, model_cfg)
        return evaluate(yte, model.predict(Xte[:, cols])).r2

    tasks = list(enumerate(combos))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            scores = list(ex.map(score, tasks))
    else:
        scores = [score(t) for t in tasks]

    best_i = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best_i]:
            best_i = i
    return SubsetResult(
        best_subset=list(combos[best_i]),
        best_score=scores[best_i],
        evaluated_count=len(combos),
    )


@dataclass
class SelectionReport:
    layer1_kept: list[str]
    layer1_dropped: list[dict]
    degenerate: list[str]
    layer2_kept: list[str]
    layer2_dropped: list[dict]
    best_subset: list[str]
    best_score: float
    evaluated_count: int

    def to_dict(self) -> dict:
        return {
            "layer1_kept": list(self.layer1_kept),
            "layer1_dropped": [dict(d) for d in self.layer1_dropped],
            "degenerate": list(self.degenerate),
            "layer2_kept": list(self.layer2_kept),
            "layer2_dropped": [dict(d) for d in self.layer2_dropped],
            "best_subset": list(self.best_subset),
            "best_score": self.best_score,
            "evaluated_count": self.evaluated_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionReport":
        return cls(**{f: d[f] for f in cls.__dataclass_fields__})


def select_factors(
    fp: pd.DataFrame, cfg: SelectionConfig | None = None, threads: int = 1
) -> SelectionReport:
    """Run both filter layers and the subset search; assemble the report."""
    cfg = cfg if cfg is not None else SelectionConfig()
    names = factor_columns(fp)
    corrs = _target_corrs(fp, names)
    degenerate = [f for f in names if corrs[f][1]]
    kept1, dropped1 = layer1_filter(fp, cfg)
    kept2, dropped2 = layer2_decorrelate(fp, kept1, cfg)
    result = subset_search(fp, kept2, cfg, threads=threads)
    return SelectionReport(
        layer1_kept=kept1,
        layer1_dropped=dropped1,
        degenerate=degenerate,
        layer2_kept=kept2,
        layer2_dropped=dropped2,
        best_subset=result.best_subset,
        best_score=result.best_score,
        evaluated_count=result.evaluated_count,
    )
