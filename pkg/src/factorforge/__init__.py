"""Cross-sectional equity factor research engine.

Builds a panel of engineered factors from price data, filters them in two
stages (target-correlation screen, pairwise decorrelation), searches factor
subsets with a scoring model, trains linear and tree-ensemble regressors
written from scratch, attributes predictions exactly per instance, and runs
a walk-forward portfolio backtest.  A synthetic data generator and a CLI tie
the stages together.

Results are deterministic for a given seed: all randomness flows from one
portable generator, and the compiled/pure-Python kernel backends produce
bit-identical output (see ``factorforge._kernels``).
"""

from __future__ import annotations

from factorforge._kernels import NAME as kernel_backend

__version__ = "0.1.0"

__all__ = ["__version__", "kernel_backend"]
