import numpy as np
import pandas as pd
import pytest

from factorforge import ingest, synthgen
from factorforge.factors import compute_factors, finalize


def build_panel(tmp_path, n_stocks=8, n_months=44, seed=3, signal_strength=0.6):
    cfg = synthgen.SynthConfig(
        n_stocks=n_stocks, n_months=n_months, seed=seed, signal_strength=signal_strength
    )
    pp = tmp_path / "prices.csv"
    mp = tmp_path / "membership.csv"
    synthgen.write_files(cfg, pp, mp)
    prices = ingest.load_csv(pp, "prices")
    membership = ingest.load_csv(mp, "membership")
    return ingest.clean(ingest.merge_and_filter(prices, membership))


@pytest.fixture(scope="session")
def panel(tmp_path_factory):
    return build_panel(tmp_path_factory.mktemp("panel"))


@pytest.fixture(scope="session")
def factor_panel_raw(panel):
    return compute_factors(panel)


@pytest.fixture(scope="session")
def factor_panel(factor_panel_raw):
    return finalize(factor_panel_raw)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_frame(n_stocks, n_months, columns, fill, start="2016-01-31"):
    """Hand-built factor-panel-shaped frame: fill(permno, t) -> row dict."""
    dates = pd.date_range(start, periods=n_months, freq="ME")
    rows = []
    for p in range(1, n_stocks + 1):
        for t, d in enumerate(dates):
            rows.append({"permno": p, "date": d, **fill(p, t)})
    return pd.DataFrame(rows, columns=["permno", "date", *columns])
