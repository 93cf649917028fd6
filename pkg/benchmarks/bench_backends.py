"""Benchmark the compiled kernels against the pure-Python fallback.

Runs the three hot paths (tree building, batch prediction, per-row SHAP) on
identical inputs through both backends, times them, and verifies that the
outputs are bit-for-bit equal while at it.

Usage: python benchmarks/bench_backends.py [--rows 5000] [--features 12] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from factorforge._kernels import _py
from factorforge.models.trees import stable_orders

try:
    from factorforge._kernels import _ext
except ImportError:
    _ext = None


def _dataset(rows: int, features: int, seed: int = 7):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, features))
    y = np.tanh(X[:, 0]) * X[:, 1 % features] + 0.1 * rng.normal(size=rows)
    return X, y


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=5000)
    ap.add_argument("--features", type=int, default=12)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if _ext is None:
        print("compiled backend not available; build it with: pip install -e . --no-build-isolation")
        return

    X, y = _dataset(args.rows, args.features)
    feature_ids = np.arange(args.features, dtype=np.int64)
    order = stable_orders(X)
    w = np.ones(X.shape[0])

    results = {}
    for name, backend in (("python", _py), ("compiled", _ext)):
        out = backend.build_tree(
            X, y, w, order, feature_ids,
            max_depth=6, min_samples_split=2,
            k_features=args.features, rng_state=None,
        )
        t_build = _time(
            lambda b=backend: b.build_tree(
                X, y, w, order, feature_ids,
                max_depth=6, min_samples_split=2,
                k_features=args.features, rng_state=None,
            ),
            args.repeat,
        )
        t_pred = _time(
            lambda b=backend, o=out: b.predict_tree(
                o["feature"], o["threshold"], o["left"], o["right"], o["value"], X
            ),
            args.repeat,
        )
        row = X[0]
        t_shap = _time(
            lambda b=backend, o=out: [
                b.tree_shap(
                    o["feature"], o["threshold"], o["left"], o["right"],
                    o["value"], o["cover"], X[i], args.features,
                )
                for i in range(50)
            ],
            args.repeat,
        )
        results[name] = (out, t_build, t_pred, t_shap)

    py_out, pb, pp, ps = results["python"]
    cx_out, cb, cp, cs = results["compiled"]
    for key in ("feature", "threshold", "left", "right", "value", "cover"):
        a, b = np.asarray(py_out[key]), np.asarray(cx_out[key])
        assert a.shape == b.shape and (a == b).all(), f"backend mismatch in {key}"
    print(f"dataset: {args.rows} rows x {args.features} features, depth-6 tree")
    print(f"{'kernel':<18}{'python':>12}{'compiled':>12}{'speedup':>10}")
    for label, tp, tc in (
        ("build_tree", pb, cb),
        ("predict_tree", pp, cp),
        ("tree_shap x50", ps, cs),
    ):
        print(f"{label:<18}{tp * 1e3:>10.2f}ms{tc * 1e3:>10.2f}ms{tp / tc:>9.1f}x")
    print("outputs bit-identical across backends")


if __name__ == "__main__":
    main()
