"""Pipeline configuration: one JSON file drives every stage.

Seed propagation rule: the pipeline ``seed`` fills in every stage seed that
the config file does not set explicitly, so `--seed 7` reseeds the whole run
while still allowing a config to pin one stage independently.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, fields

from factorforge.backtest import BacktestConfig
from factorforge.factors import FactorConfig
from factorforge.models.ensembles import BoostConfig, ForestConfig
from factorforge.selection import SelectionConfig
from factorforge.synthgen import SynthConfig

__all__ = ["PipelineConfig", "config_hash", "load_config"]

DEFAULT_RIDGE_ALPHA = 1.0


@dataclass
class PipelineConfig:
    seed: int = 42
    prices: str | None = None
    membership: str | None = None
    out_dir: str = "out"
    factors: FactorConfig = field(default_factory=FactorConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    ridge_alpha: float = DEFAULT_RIDGE_ALPHA
    forest: ForestConfig = field(default_factory=ForestConfig)
    boosting: BoostConfig = field(default_factory=BoostConfig)
    train_split: float = 0.8
    features: list[str] | None = None
    backtest: BacktestConfig = field(default_factory=BacktestConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    def prices_path(self) -> str:
        return self.prices if self.prices else os.path.join(self.out_dir, "prices.csv")

    def membership_path(self) -> str:
        return (
            self.membership
            if self.membership
            else os.path.join(self.out_dir, "membership.csv")
        )

    def to_dict(self) -> dict:
        bt_model = self.backtest.model
        bt_kind = "boosting" if isinstance(bt_model, BoostConfig) else "forest"
        return {
            "seed": self.seed,
            "paths": {
                "prices": self.prices,
                "membership": self.membership,
                "out": self.out_dir,
            },
            "factors": dict(self.factors.__dict__),
            "selection": {
                "target_corr_threshold": self.selection.target_corr_threshold,
                "pairwise_corr_threshold": self.selection.pairwise_corr_threshold,
                "subset_size": self.selection.subset_size,
                "split": self.selection.split,
                "combination_budget": self.selection.combination_budget,
                "scoring": dict(self.selection.scoring.__dict__),
            },
            "models": {
                "ridge": {"alpha": self.ridge_alpha},
                "forest": dict(self.forest.__dict__),
                "boosting": dict(self.boosting.__dict__),
                "split": self.train_split,
                "features": list(self.features) if self.features else None,
            },
            "backtest": {
                "train_months": self.backtest.train_months,
                "test_months": self.backtest.test_months,
                "top_k": self.backtest.top_k,
                "model": {"kind": bt_kind, **bt_model.__dict__},
                "features": list(self.backtest.features)
                if self.backtest.features
                else None,
            },
            "synth": dict(self.synth.__dict__),
        }


def _check_keys(section: dict, allowed, where: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ValueError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _dataclass_from(section: dict, cls, where: str, seed: int | None = None):
    names = [f.name for f in fields(cls)]
    _check_keys(section, names, where)
    kwargs = dict(section)
    if seed is not None and "seed" in names and "seed" not in kwargs:
        kwargs["seed"] = seed
    return cls(**kwargs)


def _parse_backtest(section: dict, seed: int) -> BacktestConfig:
    _check_keys(
        section, ["train_months", "test_months", "top_k", "model", "features"], "backtest"
    )
    kwargs = {k: v for k, v in section.items() if k not in ("model", "features")}
    model_sec = dict(section.get("model", {}))
    kind = model_sec.pop("kind", "boosting")
    if kind in ("boosting", "gradient_boosting"):
        model = _dataclass_from(model_sec, BoostConfig, "backtest.model", seed)
    elif kind in ("forest", "random_forest"):
        model = _dataclass_from(model_sec, ForestConfig, "backtest.model", seed)
    else:
        raise ValueError(f"backtest.model.kind must be 'boosting' or 'forest', got {kind!r}")
    features = section.get("features")
    return BacktestConfig(model=model, features=features, **kwargs)


def load_config(
    path: str | None = None,
    *,
    seed: int | None = None,
    out_dir: str | None = None,
) -> PipelineConfig:
    """Build a PipelineConfig from an optional JSON file plus CLI overrides."""
    raw: dict = {}
    if path is not None:
        with open(path) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config root must be a JSON object")
    _check_keys(
        raw,
        ["seed", "paths", "factors", "selection", "models", "backtest", "synth"],
        "config",
    )
    eff_seed = seed if seed is not None else int(raw.get("seed", 42))

    paths = dict(raw.get("paths", {}))
    _check_keys(paths, ["prices", "membership", "out"], "paths")

    models = dict(raw.get("models", {}))
    _check_keys(models, ["ridge", "forest", "boosting", "split", "features"], "models")
    ridge = dict(models.get("ridge", {}))
    _check_keys(ridge, ["alpha"], "models.ridge")

    sel_raw = dict(raw.get("selection", {}))
    scoring_raw = dict(sel_raw.pop("scoring", {}))
    sel_names = [f.name for f in fields(SelectionConfig) if f.name != "scoring"]
    _check_keys(sel_raw, sel_names, "selection")
    selection = SelectionConfig(
        scoring=_dataclass_from(scoring_raw, ForestConfig, "selection.scoring", eff_seed),
        **sel_raw,
    )

    return PipelineConfig(
        seed=eff_seed,
        prices=paths.get("prices"),
        membership=paths.get("membership"),
        out_dir=out_dir if out_dir is not None else paths.get("out", "out"),
        factors=_dataclass_from(dict(raw.get("factors", {})), FactorConfig, "factors"),
        selection=selection,
        ridge_alpha=float(ridge.get("alpha", DEFAULT_RIDGE_ALPHA)),
        forest=_dataclass_from(dict(models.get("forest", {})), ForestConfig, "models.forest", eff_seed),
        boosting=_dataclass_from(dict(models.get("boosting", {})), BoostConfig, "models.boosting", eff_seed),
        train_split=float(models.get("split", 0.8)),
        features=models.get("features"),
        backtest=_parse_backtest(dict(raw.get("backtest", {})), eff_seed),
        synth=_dataclass_from(dict(raw.get("synth", {})), SynthConfig, "synth", eff_seed),
    )


def config_hash(cfg: PipelineConfig) -> str:
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
