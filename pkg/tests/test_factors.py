import numpy as np
import pandas as pd
import pytest

from factorforge.factors import (
    BASE_FACTORS,
    FACTOR_CATALOG,
    INTERACTION_FACTORS,
    FactorConfig,
    compute_base_factors,
    compute_factors,
    compute_interaction_factors,
    finalize,
    pct_change,
    rolling_stat,
    rsi,
)

eq = np.testing.assert_array_equal  # NaN-tolerant exact comparison


class TestPctChange:
    def test_basic(self):
        out = pct_change([10.0, 11.0, 12.1], 1)
        assert np.isnan(out[0])
        assert out[1] == 11.0 / 10.0 - 1.0
        assert out[2] == 12.1 / 11.0 - 1.0

    def test_lag_two(self):
        out = pct_change([1.0, 2.0, 3.0, 4.0], 2)
        eq(out, [np.nan, np.nan, 2.0, 1.0])

    def test_zero_denominator_is_missing(self):
        out = pct_change([0.0, 5.0], 1)
        assert np.isnan(out).all()

    def test_lag_longer_than_series(self):
        assert np.isnan(pct_change([1.0, 2.0], 5)).all()

    def test_bad_lag(self):
        with pytest.raises(ValueError, match="lag"):
            pct_change([1.0], 0)


class TestRollingStat:
    def test_mean(self):
        eq(rolling_stat([1.0, 2.0, 3.0, 4.0], 3, "mean"), [np.nan, np.nan, 2.0, 3.0])

    def test_std_is_sample_std(self):
        out = rolling_stat([1.0, 2.0, 3.0, 5.0], 3, "std")
        assert np.isnan(out[:2]).all()
        assert out[2] == 1.0
        assert out[3] == pytest.approx(np.std([2.0, 3.0, 5.0], ddof=1), rel=1e-15)

    def test_min(self):
        eq(rolling_stat([3.0, 1.0, 2.0], 2, "min"), [np.nan, 1.0, 1.0])

    def test_nan_poisons_window(self):
        out = rolling_stat([1.0, np.nan, 3.0, 4.0, 5.0], 2, "mean")
        eq(out, [np.nan, np.nan, np.nan, 3.5, 4.5])

    def test_window_one_mean_is_identity(self):
        eq(rolling_stat([5.0, 6.0], 1, "mean"), [5.0, 6.0])

    def test_window_one_std_undefined(self):
        assert np.isnan(rolling_stat([5.0, 6.0], 1, "std")).all()

    def test_window_longer_than_series(self):
        assert np.isnan(rolling_stat([1.0, 2.0], 3, "mean")).all()

    def test_bad_args(self):
        with pytest.raises(ValueError, match="window"):
            rolling_stat([1.0], 0, "mean")
        with pytest.raises(ValueError, match="stat"):
            rolling_stat([1.0], 1, "median")

    def test_against_pandas(self, rng):
        v = rng.normal(size=300)
        for window in (2, 5, 20):
            s = pd.Series(v)
            np.testing.assert_allclose(
                rolling_stat(v, window, "mean"),
                s.rolling(window).mean().to_numpy(),
                rtol=0, atol=1e-12,
            )
            eq(rolling_stat(v, window, "min"), s.rolling(window).min().to_numpy())

    def test_std_against_rescan(self, rng):
        # per-window np.std re-scan; pandas' incremental update is less exact
        v = rng.normal(size=300)
        for window in (2, 5, 20):
            got = rolling_stat(v, window, "std")
            expect = np.full(v.shape[0], np.nan)
            for i in range(window - 1, v.shape[0]):
                expect[i] = np.std(v[i - window + 1 : i + 1], ddof=1)
            np.testing.assert_allclose(got, expect, rtol=1e-12, atol=0)


class TestRsi:
    def test_hand_example(self):
        # deltas [1, 1, -1, 0] -> gain windows [1,1],[1,0],[0,0]; loss [0,0],[0,1],[1,0]
        out = rsi([1.0, 2.0, 3.0, 2.0, 2.0], 2)
        eq(out, [np.nan, np.nan, 100.0, 50.0, 0.0])

    def test_all_gain_is_100(self):
        out = rsi(np.arange(1.0, 21.0), 14)
        assert (out[14:] == 100.0).all()

    def test_all_loss_is_0(self):
        out = rsi(np.arange(20.0, 0.0, -1.0), 14)
        assert (out[14:] == 0.0).all()

    def test_flat_is_50(self):
        out = rsi(np.full(20, 7.0), 14)
        assert (out[14:] == 50.0).all()

    def test_warmup_length(self):
        out = rsi(np.arange(1.0, 21.0), 14)
        assert np.isnan(out[:14]).all() and not np.isnan(out[14:]).any()

    def test_range(self, rng):
        p = np.abs(np.cumsum(rng.normal(size=500))) + 1.0
        out = rsi(p, 14)
        defined = ~np.isnan(out)
        assert defined.sum() > 400
        assert (out[defined] >= 0.0).all() and (out[defined] <= 100.0).all()

    def test_nan_price_poisons(self):
        p = np.arange(1.0, 12.0)
        p[4] = np.nan
        out = rsi(p, 3)
        # deltas 3 and 4 touch the NaN price; windows {j..j+2} hitting them
        # are j in 1..4, which land at out[4:8]
        assert out[3] == 100.0
        assert np.isnan(out[4:8]).all()
        assert out[8] == 100.0


def _tiny_panel():
    n = 30
    dates = pd.date_range("2019-01-31", periods=n, freq="ME")
    prc = np.linspace(10.0, 25.0, n) + np.sin(np.arange(n))
    df = pd.DataFrame(
        {
            "permno": np.int64(7),
            "date": dates,
            "prc": prc,
            "ret": np.concatenate([[0.0], prc[1:] / prc[:-1] - 1.0]),
            "vol": np.linspace(1000.0, 4000.0, n),
            "shrout": np.full(n, 500.0),
        }
    )
    return df


@pytest.fixture(scope="module")
def fp():
    return compute_factors(_tiny_panel())


class TestWorkedExamples:
    def test_market_cap(self, fp):
        panel = _tiny_panel()
        eq(fp["MarketCap"].to_numpy(), np.abs(panel["prc"]) * panel["shrout"])

    def test_market_cap_uses_absolute_price(self):
        panel = _tiny_panel()
        panel.loc[3, "prc"] = -12.0
        fp = compute_factors(panel)
        assert fp["MarketCap"].iloc[3] == 12.0 * 500.0

    def test_log_market_cap(self, fp):
        eq(fp["LogMarketCap"].to_numpy(), np.log1p(fp["MarketCap"].to_numpy()))

    def test_turnover(self, fp):
        panel = _tiny_panel()
        eq(fp["TurnoverRatio"].to_numpy(), (panel["vol"] / panel["shrout"]).to_numpy())

    def test_momentum(self, fp):
        panel = _tiny_panel()
        eq(fp["Momentum"].to_numpy(), pct_change(panel["prc"].to_numpy(), 4))

    def test_price_return(self, fp):
        panel = _tiny_panel()
        eq(fp["PriceReturn"].to_numpy(), pct_change(panel["prc"].to_numpy(), 1))

    def test_momentum_change_is_first_difference(self, fp):
        m = fp["Momentum"].to_numpy()
        eq(fp["MomentumChange"].to_numpy()[5:], m[5:] - m[4:-1])

    def test_amihud(self, fp):
        panel = _tiny_panel()
        p = panel["prc"].to_numpy()
        expect = np.abs(p[5] - p[4]) / panel["vol"].iloc[5]
        assert fp["AmihudIlliquidity"].iloc[5] == expect
        assert np.isnan(fp["AmihudIlliquidity"].iloc[0])

    def test_amihud_zero_volume_missing(self):
        panel = _tiny_panel()
        panel.loc[5, "vol"] = 0.0
        fp = compute_factors(panel)
        assert np.isnan(fp["AmihudIlliquidity"].iloc[5])

    def test_high_low_spread_nonnegative(self, fp):
        s = fp["HighLowSpread"].to_numpy()
        defined = ~np.isnan(s)
        assert defined.any()
        assert (s[defined] >= 0.0).all()

    def test_high_low_spread_value(self, fp):
        panel = _tiny_panel()
        p = panel["prc"].to_numpy()
        assert fp["HighLowSpread"].iloc[25] == p[25] - p[6:26].min()

    def test_moving_average(self, fp):
        panel = _tiny_panel()
        eq(
            fp["MovingAverage"].to_numpy(),
            rolling_stat(panel["prc"].to_numpy(), 20, "mean"),
        )

    def test_volatility_uses_returns(self, fp):
        panel = _tiny_panel()
        eq(
            fp["RollingVolatility"].to_numpy(),
            rolling_stat(panel["ret"].to_numpy(), 20, "std"),
        )


@pytest.fixture(scope="module")
def ip(factor_panel_raw):
    return factor_panel_raw


class TestInteractionIdentities:
    def test_volatility_turnover(self, ip):
        eq(
            ip["VolatilityTurnover"].to_numpy(),
            ip["RollingVolatility"].to_numpy() * ip["TurnoverRatio"].to_numpy(),
        )

    def test_momentum_rsi(self, ip):
        eq(ip["MomentumRSI"].to_numpy(), ip["Momentum"].to_numpy() * ip["RSI"].to_numpy())

    def test_momentum_vs_market_cap(self, ip):
        eq(
            ip["MomentumVsMarketCap"].to_numpy(),
            ip["Momentum"].to_numpy() * ip["LogMarketCap"].to_numpy(),
        )

    def test_momentum_liquidity(self, ip):
        eq(
            ip["MomentumLiquidity"].to_numpy(),
            ip["Momentum"].to_numpy() * ip["AmihudIlliquidity"].to_numpy(),
        )

    def test_multi_period_momentum(self, ip):
        eq(
            ip["MultiPeriodMomentum"].to_numpy(),
            ip["ShortMomentum"].to_numpy() * ip["LongMomentum"].to_numpy(),
        )

    def test_volatility_dynamics(self, ip):
        eq(
            ip["VolatilityDynamics"].to_numpy(),
            ip["RollingVolatility"].to_numpy() * ip["VolatilitySlope"].to_numpy(),
        )

    def test_trend_strength(self, ip):
        eq(
            ip["TrendStrength"].to_numpy(),
            ip["Momentum"].to_numpy()
            * ip["MomentumMADeviation"].to_numpy()
            * ip["RSI"].to_numpy(),
        )

    def test_abnormal_behavior(self, ip):
        eq(
            ip["AbnormalBehavior"].to_numpy(),
            ip["Momentum"].to_numpy() * ip["HighLowSpread"].to_numpy()
            - ip["RSI"].to_numpy() * ip["AmihudIlliquidity"].to_numpy(),
        )

    def test_normalized_spread_where_defined(self, ip, panel):
        got = ip["NormalizedHighLowSpread"].to_numpy()
        p = panel["prc"].to_numpy()
        s = ip["HighLowSpread"].to_numpy()
        ok = ~np.isnan(s) & (p != 0.0)
        eq(got[ok], s[ok] / p[ok])


def test_catalog_shape():
    assert len(BASE_FACTORS) == 14
    assert len(INTERACTION_FACTORS) == 17
    assert len(FACTOR_CATALOG) == 31
    assert len(set(FACTOR_CATALOG)) == 31


def test_output_columns(factor_panel_raw):
    assert list(factor_panel_raw.columns) == ["permno", "date", "ret"] + list(FACTOR_CATALOG)


def test_two_step_equals_one_pass(panel):
    base = compute_base_factors(panel)
    assert "prc" in base.columns
    two = compute_interaction_factors(base)
    one = compute_factors(panel)
    pd.testing.assert_frame_equal(two[one.columns], one)


def test_interaction_requires_base_columns(panel):
    with pytest.raises(ValueError, match="base factors missing"):
        compute_interaction_factors(panel[["permno", "date", "ret", "prc"]])


def test_interaction_requires_price(panel):
    base = compute_base_factors(panel).drop(columns=["prc"])
    with pytest.raises(ValueError, match="prc"):
        compute_interaction_factors(base)


def test_per_security_locality(panel):
    full = compute_factors(panel)
    pid = panel["permno"].iloc[0]
    alone = compute_factors(panel[panel["permno"] == pid].reset_index(drop=True))
    sub = full[full["permno"] == pid].reset_index(drop=True)
    pd.testing.assert_frame_equal(sub, alone)


def test_date_labels_do_not_matter(panel):
    shifted = panel.copy()
    shifted["date"] = shifted["date"] + pd.DateOffset(years=3)
    a = compute_factors(panel).drop(columns=["date"])
    b = compute_factors(shifted).drop(columns=["date"])
    pd.testing.assert_frame_equal(a, b)


class TestFinalize:
    def test_inf_becomes_previous_value(self):
        fp = pd.DataFrame(
            {
                "permno": np.int64(1),
                "date": pd.date_range("2020-01-31", periods=3, freq="ME"),
                "ret": [0.0, 0.1, 0.2],
                "X": [5.0, np.inf, -np.inf],
            }
        )
        out = finalize(fp)
        assert list(out["X"]) == [5.0, 5.0, 5.0]

    def test_leading_gap_becomes_zero(self):
        fp = pd.DataFrame(
            {
                "permno": np.int64(1),
                "date": pd.date_range("2020-01-31", periods=3, freq="ME"),
                "ret": [0.0, 0.1, 0.2],
                "X": [np.nan, np.nan, 3.0],
            }
        )
        assert list(finalize(fp)["X"]) == [0.0, 0.0, 3.0]

    def test_fill_stays_inside_permno(self):
        fp = pd.DataFrame(
            {
                "permno": np.array([1, 1, 2], dtype=np.int64),
                "date": pd.to_datetime(["2020-01-31", "2020-02-29", "2020-01-31"]),
                "ret": [0.0, 0.0, 0.0],
                "X": [9.0, 9.0, np.nan],
            }
        )
        assert finalize(fp)["X"].iloc[2] == 0.0

    def test_all_finite_and_keys_untouched(self, factor_panel_raw):
        out = finalize(factor_panel_raw)
        vals = out[list(FACTOR_CATALOG)].to_numpy()
        assert np.isfinite(vals).all()
        pd.testing.assert_frame_equal(
            out[["permno", "date", "ret"]], factor_panel_raw[["permno", "date", "ret"]]
        )

    def test_finite_cells_preserved(self, factor_panel_raw):
        out = finalize(factor_panel_raw)
        raw = factor_panel_raw[list(FACTOR_CATALOG)].to_numpy()
        fin = out[list(FACTOR_CATALOG)].to_numpy()
        mask = np.isfinite(raw)
        eq(fin[mask], raw[mask])


def test_config_validation():
    with pytest.raises(ValueError, match="momentum_lag"):
        FactorConfig(momentum_lag=0)
    with pytest.raises(ValueError, match="rsi_window"):
        FactorConfig(rsi_window=-3)
    with pytest.raises(ValueError, match="volatility_window"):
        FactorConfig(volatility_window=2.5)


def test_custom_config_changes_windows(panel):
    fast = compute_factors(panel, FactorConfig(momentum_lag=2))
    slow = compute_factors(panel, FactorConfig(momentum_lag=6))
    p = panel["prc"].to_numpy()
    sub = panel["permno"] == panel["permno"].iloc[0]
    eq(fast.loc[sub, "Momentum"].to_numpy(), pct_change(p[sub.to_numpy()], 2))
    eq(slow.loc[sub, "Momentum"].to_numpy(), pct_change(p[sub.to_numpy()], 6))
