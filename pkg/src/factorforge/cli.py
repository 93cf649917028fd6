"""Command-line pipeline driver.

Each subcommand runs one stage against the artifacts directory; ``run-all``
chains ingest → factors → select → train → explain → backtest and writes a
provenance summary.  All artifacts are pure functions of (inputs, config,
seed): rerunning any stage reproduces its files byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np
import pandas as pd

import factorforge
from factorforge import ingest, svg, synthgen
from factorforge.backtest import run_backtest
from factorforge.config import PipelineConfig, config_hash, load_config
from factorforge.explain import linear_attribution, impurity_importance, shap_values
from factorforge.factors import FACTOR_CATALOG, compute_factors, finalize
from factorforge.models import (
    evaluate,
    fit_gradient_boosting,
    fit_ols,
    fit_random_forest,
    fit_ridge,
    predict,
)
from factorforge.models.io import load_model, save_model
from factorforge.models.linear import LinearModel
from factorforge.selection import SelectionReport, chronological_split, select_factors

STAGES = ("ingest", "factors", "select", "train", "explain", "backtest")


def _out(cfg: PipelineConfig, name: str) -> str:
    return os.path.join(cfg.out_dir, name)


def _write_csv_frame(df: pd.DataFrame, path: str) -> None:
    out = df.copy()
    if "date" in out.columns:
        out["date"] = pd.DatetimeIndex(out["date"]).strftime("%Y-%m-%d")
    out.to_csv(path, index=False)


def _read_factors(cfg: PipelineConfig) -> pd.DataFrame:
    path = _out(cfg, "factors.csv")
    if not os.path.exists(path):
        raise FileNotFoundError(f"{path} not found; run the factors stage first")
    return pd.read_csv(path, parse_dates=["date"])


def _selected_features(cfg: PipelineConfig) -> list[str]:
    """Feature list for train/explain/backtest: explicit config wins, else
    the selection report's best subset."""
    if cfg.features:
        return list(cfg.features)
    path = _out(cfg, "selection_report.json")
    if not os.path.exists(path):
        raise FileNotFoundError(
            f"{path} not found; run the select stage first or set models.features"
        )
    with open(path) as fh:
        report = SelectionReport.from_dict(json.load(fh))
    if not report.best_subset:
        raise ValueError("selection report has an empty best subset")
    return list(report.best_subset)


def cmd_synth(cfg: PipelineConfig, threads: int) -> list[str]:
    os.makedirs(cfg.out_dir, exist_ok=True)
    prices_path = cfg.prices_path()
    membership_path = cfg.membership_path()
    synthgen.write_files(cfg.synth, prices_path, membership_path)
    print(
        f"[synth] wrote {cfg.synth.n_stocks} stocks x {cfg.synth.n_months} months "
        f"(seed {cfg.synth.seed}) -> {prices_path}, {membership_path}"
    )
    return [prices_path, membership_path]


def cmd_ingest(cfg: PipelineConfig, threads: int) -> list[str]:
    os.makedirs(cfg.out_dir, exist_ok=True)
    prices = ingest.load_csv(cfg.prices_path(), "prices")
    membership = ingest.load_csv(cfg.membership_path(), "membership")
    print(f"[ingest] prices rows: {len(prices)} (degraded cells: {prices.attrs['degraded_cells']})")
    print(f"[ingest] membership windows: {len(membership)}")
    merged = ingest.merge_and_filter(prices, membership)
    print(f"[ingest] rows after membership filter: {len(merged)}")
    panel = ingest.clean(merged)
    print(f"[ingest] cleaned panel rows: {len(panel)}")
    if len(panel) == 0:
        print("[ingest] warning: empty panel (no price rows fall in any membership window)")
    path = _out(cfg, "panel.csv")
    _write_csv_frame(panel, path)
    return [path]


def cmd_factors(cfg: PipelineConfig, threads: int) -> list[str]:
    panel_path = _out(cfg, "panel.csv")
    if not os.path.exists(panel_path):
        raise FileNotFoundError(f"{panel_path} not found; run the ingest stage first")
    panel = pd.read_csv(panel_path, parse_dates=["date"])
    fp = finalize(compute_factors(panel, cfg.factors))
    if cfg.synth.leak_features:
        fp = synthgen.inject_leak(fp, cfg.seed)
        print("[factors] leak feature planted (leak_features on)")
    path = _out(cfg, "factors.csv")
    _write_csv_frame(fp, path)
    n_factors = len(fp.columns) - 3
    print(f"[factors] rows: {len(fp)}, factor columns: {n_factors} "
          f"(catalog {len(FACTOR_CATALOG)})")
    return [path]


def cmd_select(cfg: PipelineConfig, threads: int) -> list[str]:
    fp = _read_factors(cfg)
    report = select_factors(fp, cfg.selection, threads=threads)
    path = _out(cfg, "selection_report.json")
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    print(f"[select] layer1 kept {len(report.layer1_kept)}, dropped {len(report.layer1_dropped)}")
    print(f"[select] layer2 kept {len(report.layer2_kept)}, dropped {len(report.layer2_dropped)}")
    print(f"[select] best subset ({len(report.best_subset)} of {report.evaluated_count} "
          f"combinations, R^2 {report.best_score:.6f}): {', '.join(report.best_subset)}")
    return [path]


def _train_test(cfg: PipelineConfig, fp: pd.DataFrame, features: list[str]):
    missing = [f for f in features if f not in fp.columns]
    if missing:
        raise ValueError(f"features missing from factor panel: {missing}")
    train_mask, test_mask = chronological_split(fp, cfg.train_split)
    X = fp[features].to_numpy(dtype=np.float64)
    y = fp["ret"].to_numpy(dtype=np.float64)
    return X[train_mask], y[train_mask], X[test_mask], y[test_mask]


def cmd_train(cfg: PipelineConfig, threads: int) -> list[str]:
    fp = _read_factors(cfg)
    features = _selected_features(cfg)
    if not features:
        raise ValueError("feature list is empty")
    Xtr, ytr, Xte, yte = _train_test(cfg, fp, features)
    fitted = {
        "ols": fit_ols(Xtr, ytr),
        "ridge": fit_ridge(Xtr, ytr, cfg.ridge_alpha),
        "random_forest": fit_random_forest(Xtr, ytr, cfg.forest),
        "gradient_boosting": fit_gradient_boosting(Xtr, ytr, cfg.boosting),
    }
    paths = []
    lines = ["model,mse,r2"]
    for name, model in fitted.items():
        file_name = {"random_forest": "model_forest.json",
                     "gradient_boosting": "model_boosting.json"}.get(name, f"model_{name}.json")
        mpath = _out(cfg, file_name)
        save_model(model, mpath)
        paths.append(mpath)
        m = evaluate(yte, predict(model, Xte))
        lines.append(f"{name},{m.mse!r},{m.r2!r}")
        print(f"[train] {name}: test mse {m.mse:.6g}, r2 {m.r2:.6f}")
    metrics_path = _out(cfg, "metrics.csv")
    with open(metrics_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    paths.append(metrics_path)
    return paths


def _rank_csv(path: str, header: str, names: list[str], values: np.ndarray) -> None:
    order = np.argsort(-values, kind="stable")
    lines = [header]
    for rank, i in enumerate(order, start=1):
        lines.append(f"{names[i]},{float(values[i])!r},{rank}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_explain(cfg: PipelineConfig, threads: int, model_path: str | None = None) -> list[str]:
    fp = _read_factors(cfg)
    features = _selected_features(cfg)
    mpath = model_path if model_path else _out(cfg, "model_boosting.json")
    if not os.path.exists(mpath):
        raise FileNotFoundError(f"{mpath} not found; run the train stage first")
    model = load_model(mpath)
    n_feat = getattr(model, "n_features", None)
    if n_feat is not None and n_feat != len(features):
        raise ValueError(
            f"model expects {n_feat} features but the configured list has {len(features)}"
        )
    Xtr, ytr, Xte, yte = _train_test(cfg, fp, features)
    paths = []
    if isinstance(model, LinearModel):
        print("[explain] linear model: using exact linear attributions, no impurity importance")
        background = Xtr.mean(axis=0)
        phis = np.empty_like(Xte)
        worst = 0.0
        for i in range(Xte.shape[0]):
            exp = linear_attribution(model, Xte[i], background)
            phis[i] = exp.phi
            worst = max(worst, abs(exp.base_value + exp.phi.sum() - float(predict(model, Xte[i : i + 1])[0])))
    else:
        imp = impurity_importance(model)
        ipath = _out(cfg, "importance.csv")
        _rank_csv(ipath, "feature,importance,rank", features, imp)
        paths.append(ipath)
        phis, base = shap_values(model, Xte)
        preds = predict(model, Xte)
        worst = float(np.max(np.abs(base + phis.sum(axis=1) - preds))) if len(preds) else 0.0
    if worst >= 1e-9:
        raise ValueError(f"local accuracy violated: max |base + sum(phi) - pred| = {worst:.3e}")
    print(f"[explain] local accuracy: pass (max deviation {worst:.3e} over {Xte.shape[0]} rows)")
    mean_abs = np.abs(phis).mean(axis=0)
    spath = _out(cfg, "shap_summary.csv")
    _rank_csv(spath, "feature,mean_abs_shap,rank", features, mean_abs)
    paths.append(spath)
    order = np.argsort(-mean_abs, kind="stable")
    chart = svg.bar_chart(
        [features[i] for i in order],
        [float(mean_abs[i]) for i in order],
        title="mean |attribution| per feature",
    )
    vpath = _out(cfg, "shap_summary.svg")
    with open(vpath, "w") as fh:
        fh.write(chart)
    paths.append(vpath)
    print(f"[explain] wrote {', '.join(os.path.basename(p) for p in paths)}")
    return paths


def cmd_backtest(cfg: PipelineConfig, threads: int) -> list[str]:
    fp = _read_factors(cfg)
    bt_cfg = cfg.backtest
    if not bt_cfg.features:
        bt_cfg = replace(bt_cfg, features=_selected_features(cfg))
    report = run_backtest(fp, bt_cfg)
    jpath = _out(cfg, "backtest_report.json")
    with open(jpath, "w") as fh:
        json.dump(report.to_dict(bt_cfg), fh, indent=2)
        fh.write("\n")
    lines = ["window,end_date,portfolio_return,benchmark_return,cum_portfolio,cum_benchmark"]
    for w, cp, cb in zip(report.windows, report.cumulative_portfolio, report.cumulative_benchmark):
        lines.append(
            f"{w.index},{w.test_end.date()},{w.portfolio_return!r},"
            f"{w.benchmark_return!r},{cp!r},{cb!r}"
        )
    cpath = _out(cfg, "backtest_curves.csv")
    with open(cpath, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    chart = svg.line_chart(
        report.cumulative_portfolio,
        report.cumulative_benchmark,
        labels=("portfolio", "benchmark"),
        title="cumulative return",
    )
    vpath = _out(cfg, "backtest_curves.svg")
    with open(vpath, "w") as fh:
        fh.write(chart)
    sharpe = "undefined" if report.sharpe is None else f"{report.sharpe:.4f}"
    print(f"[backtest] windows: {len(report.windows)}, mean return {report.mean_return:.6g}, "
          f"sharpe {sharpe}")
    return [jpath, cpath, vpath]


def cmd_run_all(cfg: PipelineConfig, threads: int) -> list[str]:
    artifacts: dict[str, list[str]] = {}
    runners = {
        "ingest": cmd_ingest,
        "factors": cmd_factors,
        "select": cmd_select,
        "train": cmd_train,
        "explain": cmd_explain,
        "backtest": cmd_backtest,
    }
    for stage in STAGES:
        try:
            artifacts[stage] = runners[stage](cfg, threads)
        except Exception as exc:
            raise StageError(stage, exc) from exc
    summary = {
        "version": factorforge.__version__,
        "seed": cfg.seed,
        "config_hash": config_hash(cfg),
        "artifacts": {
            stage: [os.path.basename(p) for p in paths]
            for stage, paths in artifacts.items()
        },
    }
    spath = _out(cfg, "summary.json")
    with open(spath, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"[run-all] complete; summary -> {spath}")
    return [spath]


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage


def _resolve_threads(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("FACTORFORGE_THREADS", "")
    if env.strip():
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"FACTORFORGE_THREADS must be an integer, got {env!r}") from None
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="factorforge",
        description="Factor engineering, selection, model training, and backtesting pipeline.",
    )
    parser.add_argument("--config", help="pipeline config JSON file")
    parser.add_argument("--seed", type=int, help="override the pipeline seed")
    parser.add_argument("--out", help="override the artifacts directory")
    parser.add_argument("--threads", type=int,
                        help="worker threads (or env FACTORFORGE_THREADS; default 1)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("synth", "ingest", "factors", "select", "train", "backtest", "run-all"):
        sub.add_parser(name)
    p_explain = sub.add_parser("explain")
    p_explain.add_argument("--model", help="model JSON file (default: model_boosting.json)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, out_dir=args.out)
        threads = _resolve_threads(args.threads)
        os.makedirs(cfg.out_dir, exist_ok=True)
        if args.command == "synth":
            cmd_synth(cfg, threads)
        elif args.command == "ingest":
            cmd_ingest(cfg, threads)
        elif args.command == "factors":
            cmd_factors(cfg, threads)
        elif args.command == "select":
            cmd_select(cfg, threads)
        elif args.command == "train":
            cmd_train(cfg, threads)
        elif args.command == "explain":
            cmd_explain(cfg, threads, model_path=args.model)
        elif args.command == "backtest":
            cmd_backtest(cfg, threads)
        elif args.command == "run-all":
            cmd_run_all(cfg, threads)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        stage = args.command if args.command != "run-all" else "config"
        print(f"error: stage '{stage}' failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
