"""Series types, CSV ingestion and descriptive statistics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class LogReturnSeries:
    """Observed log-returns X_{jD} with their observation indices.

    Attributes:
        values: Log-returns.
        delta: Sampling interval.
        j: Observation index of each value; defaults to 1..n.
        origin: Optional timestamp of the first price.
    """

    values: np.ndarray
    delta: float
    j: np.ndarray | None = None
    origin: object = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size == 0:
            raise InputError("empty log-return series")
        if not np.all(np.isfinite(v)):
            raise InputError("log-returns must be finite")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise InputError(f"sampling interval must be positive, got {self.delta}")
        jj = np.arange(1, v.size + 1) if self.j is None else np.asarray(self.j, dtype=np.int64).ravel()
        if jj.size != v.size:
            raise InputError("index array and values differ in length")
        if jj.size and jj.min() < 0:
            raise InputError("observation indices must be >= 0")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "j", jj)

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class PriceSeries:
    timestamps: list = field(default_factory=list)
    prices: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __len__(self) -> int:
        return self.prices.size


def _parse_time(s: str):
    s = s.strip()
    try:
        return float(s)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(s)
    except ValueError:
        raise InputError(f"unparseable timestamp {s!r}") from None


def ingest_csv(path, date_col: str = "date", price_col: str = "price",
               allow_unsorted: bool = False) -> PriceSeries:
    """Read a price series from a CSV file with a header row.

    Row numbers in error messages count data rows from 1.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (date_col, price_col):
            if col not in header:
                raise InputError(f"column {col!r} not found; header is {header}")
        times, prices = [], []
        for row_no, row in enumerate(reader, start=1):
            raw = row.get(price_col)
            try:
                price = float(raw)
            except (TypeError, ValueError):
                raise InputError(f"row {row_no}: unparseable price {raw!r}") from None
            if not math.isfinite(price) or price <= 0:
                raise InputError(f"row {row_no}: price must be positive, got {raw!r}")
            if row.get(date_col) is None:
                raise InputError(f"row {row_no}: missing timestamp")
            times.append(_parse_time(row[date_col]))
            prices.append(price)
    if not prices:
        raise InputError("CSV has no data rows")
    try:
        bad = next((i for i in range(1, len(times)) if times[i] <= times[i - 1]), None)
    except TypeError:
        raise InputError("timestamps mix numbers and dates") from None
    if bad is not None:
        if not allow_unsorted:
            raise InputError(f"row {bad + 1}: timestamps not increasing (use allow_unsorted to sort)")
        order = sorted(range(len(times)), key=times.__getitem__)
        times = [times[i] for i in order]
        prices = [prices[i] for i in order]
        if any(times[i] == times[i - 1] for i in range(1, len(times))):
            raise InputError("duplicate timestamps")
    return PriceSeries(times, np.array(prices))


def write_price_csv(path, times, prices, date_col: str = "date", price_col: str = "price") -> None:
    """Write a price series so that ingest_csv reads it back bit for bit."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow([date_col, price_col])
        for t, s in zip(times, prices):
            wr.writerow([t if isinstance(t, str) else repr(t), repr(float(s))])


def to_logreturns(prices, delta: float = 1.0 / 252) -> LogReturnSeries:
    """Log-ratios of consecutive prices."""
    if isinstance(prices, PriceSeries):
        origin = prices.timestamps[0] if prices.timestamps else None
        s = prices.prices
    else:
        origin = None
        s = np.asarray(prices, dtype=float)
    if s.size < 2:
        raise InputError("need at least two prices")
    if np.any(~np.isfinite(s)) or np.any(s <= 0):
        raise InputError("prices must be positive and finite")
    return LogReturnSeries(np.diff(np.log(s)), delta, origin=origin)


def describe(x) -> dict:
    """Mean, sample sd, skewness and raw kurtosis (Gaussian = 3).

    Skewness and kurtosis use the population central moments; they are
    reported as None when the variance is zero.
    """
    v = x.values if isinstance(x, LogReturnSeries) else np.asarray(x, dtype=float)
    n = v.size
    if n < 2:
        raise InputError("describe needs at least two observations")
    mean = math.fsum(v) / n
    d = v - mean
    m2 = math.fsum(d * d) / n
    out = {"n": n, "mean": mean, "sd": math.sqrt(m2 * n / (n - 1)), "skewness": None, "kurtosis": None}
    if m2 > 0:
        out["skewness"] = math.fsum(d**3) / n / m2**1.5
        out["kurtosis"] = math.fsum(d**4) / n / m2**2
    return out
