"""Panel ingestion: CSV loading, membership filtering, and cleaning.

Input files are CRSP-shaped: a prices file with one row per security-date
and a membership file of inclusion windows per security.  Key cells (ids and
dates) must parse or loading fails with the offending row and column named;
numeric cells degrade to missing markers and are counted in
``df.attrs["degraded_cells"]``.
"""

from __future__ import annotations

import csv
import os
from datetime import date as _date

import numpy as np
import pandas as pd

__all__ = [
    "MEMBERSHIP_COLUMNS",
    "PRICE_COLUMNS",
    "VALUE_COLUMNS",
    "clean",
    "load_csv",
    "merge_and_filter",
]

PRICE_COLUMNS = ("permno", "date", "prc", "ret", "vol", "shrout")
MEMBERSHIP_COLUMNS = ("permno", "start_date", "end_date")
VALUE_COLUMNS = ("prc", "ret", "vol", "shrout")


def _parse_int(text: str, path, line_no: int, col: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(
            f"{path}, line {line_no}, column '{col}': invalid integer {text!r}"
        ) from None


def _parse_date(text: str, path, line_no: int, col: str) -> _date:
    try:
        return _date.fromisoformat(text)
    except ValueError:
        raise ValueError(
            f"{path}, line {line_no}, column '{col}': invalid date {text!r}"
        ) from None


def load_csv(path: str | os.PathLike, kind: str) -> pd.DataFrame:
    """Load a prices or membership CSV with strict keys and lenient values.

    ``kind`` is ``"prices"`` or ``"membership"``.  The header must contain
    the documented columns for that kind (extras are rejected too, to catch
    schema drift).  Row order is preserved.  Empty or unparseable numeric
    cells become NaN; the count of unparseable ones lands in
    ``result.attrs["degraded_cells"]``.
    """
    if kind not in ("prices", "membership"):
        raise ValueError(f"kind must be 'prices' or 'membership', got {kind!r}")
    expected = PRICE_COLUMNS if kind == "prices" else MEMBERSHIP_COLUMNS
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected header row") from None
        header = [h.strip() for h in header]
        for col in expected:
            if col not in header:
                raise ValueError(f"{path}: missing required column '{col}'")
        for col in header:
            if col not in expected:
                raise ValueError(f"{path}: unexpected column '{col}'")
        pos = {col: header.index(col) for col in expected}

        rows = []
        degraded = 0
        for line_no, raw in enumerate(reader, start=2):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            if len(raw) != len(header):
                raise ValueError(
                    f"{path}, line {line_no}: expected {len(header)} cells, got {len(raw)}"
                )
            cells = [c.strip() for c in raw]
            if kind == "prices":
                permno = _parse_int(cells[pos["permno"]], path, line_no, "permno")
                day = _parse_date(cells[pos["date"]], path, line_no, "date")
                values = []
                for col in VALUE_COLUMNS:
                    text = cells[pos[col]]
                    if text == "":
                        values.append(np.nan)
                        continue
                    try:
                        values.append(float(text))
                    except ValueError:
                        values.append(np.nan)
                        degraded += 1
                rows.append((permno, day, *values))
            else:
                permno = _parse_int(cells[pos["permno"]], path, line_no, "permno")
                start = _parse_date(cells[pos["start_date"]], path, line_no, "start_date")
                end_text = cells[pos["end_date"]]
                end = (
                    None
                    if end_text == ""
                    else _parse_date(end_text, path, line_no, "end_date")
                )
                rows.append((permno, start, end))

    if kind == "prices":
        df = pd.DataFrame(rows, columns=list(PRICE_COLUMNS))
        df["permno"] = df["permno"].astype(np.int64)
        df["date"] = pd.to_datetime(df["date"])
        for col in VALUE_COLUMNS:
            df[col] = df[col].astype(np.float64)
    else:
        df = pd.DataFrame(rows, columns=list(MEMBERSHIP_COLUMNS))
        df["permno"] = df["permno"].astype(np.int64)
        df["start_date"] = pd.to_datetime(df["start_date"])
        df["end_date"] = pd.to_datetime(df["end_date"])
        degraded = 0
    df.attrs["degraded_cells"] = degraded
    return df


def merge_and_filter(prices: pd.DataFrame, membership: pd.DataFrame) -> pd.DataFrame:
    """Keep price rows that fall inside a membership window for their permno.

    Windows are inclusive on both ends; a missing end date means membership
    stays open through the latest date in the price data.  A security may
    have several windows (dropped and re-added).  Output is sorted by
    (permno, date).
    """
    if len(prices) == 0:
        out = prices.copy()
        out.attrs = {}
        return out
    max_date = prices["date"].max()
    windows = membership.copy()
    windows["end_date"] = windows["end_date"].fillna(max_date)

    joined = prices.reset_index(names="_row").merge(windows, on="permno", how="inner")
    inside = joined[
        (joined["date"] >= joined["start_date"]) & (joined["date"] <= joined["end_date"])
    ]
    keep = np.unique(inside["_row"].to_numpy())
    out = (
        prices.iloc[keep]
        .sort_values(["permno", "date"], kind="stable")
        .reset_index(drop=True)
    )
    out.attrs = {}
    return out


def clean(panel: pd.DataFrame) -> pd.DataFrame:
    """Resolve non-finite values: ∞ → missing, forward-fill, then zero.

    Filling is per security in date order, so a gap takes the security's
    previous value and leading gaps become 0.  Row count is unchanged and
    the operation is idempotent.
    """
    df = (
        panel.sort_values(["permno", "date"], kind="stable")
        .reset_index(drop=True)
        .copy()
    )
    cols = list(VALUE_COLUMNS)
    block = df[cols].replace([np.inf, -np.inf], np.nan)
    df[cols] = block
    df[cols] = df.groupby("permno", sort=False)[cols].ffill()
    df[cols] = df[cols].fillna(0.0)
    df.attrs = {}
    return df
