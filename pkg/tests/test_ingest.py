import numpy as np
import pandas as pd
import pytest

from factorforge import ingest

PRICES_OK = """permno,date,prc,ret,vol,shrout
10001,2020-01-31,10.5,0.01,1000,5000
10001,2020-02-29,11.0,0.047619,1100,5000
10002,2020-01-31,-20.0,0.0,500,2000
"""

MEMBERS_OK = """permno,start_date,end_date
10001,2020-01-01,2020-12-31
10002,2020-01-01,
"""


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_prices_well_formed(tmp_path):
    df = ingest.load_csv(_write(tmp_path, "p.csv", PRICES_OK), "prices")
    assert len(df) == 3
    assert list(df.columns) == list(ingest.PRICE_COLUMNS)
    assert df.attrs["degraded_cells"] == 0
    assert df["permno"].dtype == np.int64
    assert df["prc"].iloc[2] == -20.0


def test_load_membership_blank_end(tmp_path):
    df = ingest.load_csv(_write(tmp_path, "m.csv", MEMBERS_OK), "membership")
    assert len(df) == 2
    assert pd.isna(df["end_date"].iloc[1])


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        ingest.load_csv("/nonexistent/prices.csv", "prices")


def test_missing_column_named(tmp_path):
    p = _write(tmp_path, "p.csv", "date,prc,ret,vol,shrout\n2020-01-31,1,0,1,1\n")
    with pytest.raises(ValueError, match="permno"):
        ingest.load_csv(p, "prices")


def test_unexpected_column_rejected(tmp_path):
    p = _write(tmp_path, "p.csv", PRICES_OK.replace("shrout", "shrout,extra"))
    with pytest.raises(ValueError, match="extra"):
        ingest.load_csv(p, "prices")


def test_malformed_date_names_line_and_column(tmp_path):
    text = PRICES_OK.replace("2020-02-29", "Feb-29")
    p = _write(tmp_path, "p.csv", text)
    with pytest.raises(ValueError, match=r"line 3, column 'date'"):
        ingest.load_csv(p, "prices")


def test_malformed_permno_is_strict(tmp_path):
    p = _write(tmp_path, "p.csv", PRICES_OK.replace("10002", "ABC", 1))
    with pytest.raises(ValueError, match=r"column 'permno'"):
        ingest.load_csv(p, "prices")


def test_empty_numeric_cell_is_missing_not_degraded(tmp_path):
    text = PRICES_OK.replace("10.5", "")
    df = ingest.load_csv(_write(tmp_path, "p.csv", text), "prices")
    assert np.isnan(df["prc"].iloc[0])
    assert df.attrs["degraded_cells"] == 0


def test_garbage_numeric_cell_degrades(tmp_path):
    text = PRICES_OK.replace("0.047619", "n/a")
    df = ingest.load_csv(_write(tmp_path, "p.csv", text), "prices")
    assert np.isnan(df["ret"].iloc[1])
    assert df.attrs["degraded_cells"] == 1


def _panel(rows):
    df = pd.DataFrame(rows, columns=["permno", "date", "prc", "ret", "vol", "shrout"])
    df["date"] = pd.to_datetime(df["date"])
    df["permno"] = df["permno"].astype(np.int64)
    for c in ("prc", "ret", "vol", "shrout"):
        df[c] = df[c].astype(np.float64)
    return df


def _members(rows):
    df = pd.DataFrame(rows, columns=["permno", "start_date", "end_date"])
    df["start_date"] = pd.to_datetime(df["start_date"])
    df["end_date"] = pd.to_datetime(df["end_date"])
    df["permno"] = df["permno"].astype(np.int64)
    return df


def test_merge_inclusive_window():
    prices = _panel([
        (1, "2020-01-15", 10, 0.0, 1, 1),
        (1, "2020-02-15", 11, 0.1, 1, 1),
        (1, "2020-03-15", 12, 0.09, 1, 1),
    ])
    members = _members([(1, "2020-02-15", "2020-03-15")])
    out = ingest.merge_and_filter(prices, members)
    assert list(out["date"].dt.strftime("%Y-%m-%d")) == ["2020-02-15", "2020-03-15"]


def test_merge_drops_day_after_end():
    prices = _panel([(1, "2020-03-16", 12, 0.0, 1, 1)])
    members = _members([(1, "2020-02-15", "2020-03-15")])
    assert len(ingest.merge_and_filter(prices, members)) == 0


def test_merge_unknown_permno_dropped():
    prices = _panel([(9, "2020-03-15", 12, 0.0, 1, 1)])
    members = _members([(1, "2020-01-01", "2020-12-31")])
    assert len(ingest.merge_and_filter(prices, members)) == 0


def test_merge_blank_end_extends_to_max_date():
    prices = _panel([
        (1, "2020-01-15", 10, 0.0, 1, 1),
        (2, "2021-06-15", 99, 0.0, 1, 1),
    ])
    members = _members([(1, "2020-01-01", None)])
    out = ingest.merge_and_filter(prices, members)
    assert len(out) == 1 and out["permno"].iloc[0] == 1


def test_merge_output_sorted():
    prices = _panel([
        (2, "2020-02-15", 1, 0.0, 1, 1),
        (1, "2020-02-15", 1, 0.0, 1, 1),
        (1, "2020-01-15", 1, 0.0, 1, 1),
    ])
    members = _members([(1, "2020-01-01", "2020-12-31"), (2, "2020-01-01", "2020-12-31")])
    out = ingest.merge_and_filter(prices, members)
    keys = list(zip(out["permno"], out["date"].dt.strftime("%m")))
    assert keys == sorted(keys)


def test_clean_forward_fill_and_leading_zero():
    panel = _panel([
        (1, "2020-01-31", 10, 0.1, 1, 1),
        (1, "2020-02-29", 10, np.nan, 1, 1),
        (1, "2020-03-31", 10, 0.3, 1, 1),
        (2, "2020-01-31", 10, np.nan, 1, 1),
        (2, "2020-02-29", 10, 0.2, 1, 1),
    ])
    out = ingest.clean(panel)
    assert list(out[out.permno == 1]["ret"]) == [0.1, 0.1, 0.3]
    assert list(out[out.permno == 2]["ret"]) == [0.0, 0.2]


def test_clean_inf_then_fill_composition():
    panel = _panel([
        (1, "2020-01-31", 10, np.inf, 1, 1),
        (1, "2020-02-29", 10, np.nan, 1, 1),
    ])
    out = ingest.clean(panel)
    assert list(out["ret"]) == [0.0, 0.0]


def test_clean_no_cross_permno_fill():
    panel = _panel([
        (1, "2020-01-31", 10, 777.0, 1, 1),
        (2, "2020-01-31", 10, np.nan, 1, 1),
    ])
    out = ingest.clean(panel)
    assert out[out.permno == 2]["ret"].iloc[0] == 0.0


def test_clean_idempotent_and_finite(panel):
    once = ingest.clean(panel)
    twice = ingest.clean(once)
    pd.testing.assert_frame_equal(once, twice)
    vals = once[["prc", "ret", "vol", "shrout"]].to_numpy()
    assert np.isfinite(vals).all()
    assert len(once) == len(panel)
