"""Time-series containers and ingestion.

A :class:`TimeSeries` is an ordered set of ``(t, value)`` observations where
``t`` counts days since an explicit calendar origin and every value is a
positive real.  Trading-day closures simply appear as absent ``t``'s; no
imputation or calendar arithmetic beyond day differences is done here.
"""

from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

import numpy as np
import pandas as pd

from .errors import PreconditionError

__all__ = [
    "TimeSeries",
    "LogSeries",
    "log10_transform",
    "read_series_csv",
    "read_sample_csv",
    "abs_log_returns",
    "diff_log",
]


def _as_readonly(a, dtype=float):
    arr = np.ascontiguousarray(np.asarray(a, dtype=dtype))
    arr.flags.writeable = False
    return arr


def _check_grid(t):
    t = _as_readonly(t)
    if t.ndim != 1 or t.size == 0:
        raise PreconditionError("time grid must be a non-empty 1-D array")
    if not np.all(np.isfinite(t)):
        raise PreconditionError("time grid contains non-finite values")
    if np.any(np.diff(t) <= 0):
        raise PreconditionError("time grid must be strictly increasing")
    return t


@dataclass(frozen=True)
class TimeSeries:
    """Ordered positive observations on a days-since-origin grid."""

    origin: date
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", _check_grid(self.t))
        v = _as_readonly(self.values)
        if v.shape != self.t.shape:
            raise PreconditionError("t and values must have equal length")
        if not np.all(np.isfinite(v)):
            raise PreconditionError("values contain non-finite entries")
        if np.any(v <= 0):
            bad = int(np.argmax(v <= 0))
            raise PreconditionError(
                f"values must be strictly positive (index {bad}: {v[bad]!r})"
            )
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.t.size

    def dates(self):
        """Calendar dates of the observations (origin + t days)."""
        return [self.origin + timedelta(days=float(ti)) for ti in self.t]

    def t_of_date(self, d):
        """Days since the origin for a calendar date or datetime."""
        return date_to_t(self.origin, d)

    def restrict(self, t_min=None, t_max=None):
        """Sub-series with t in [t_min, t_max] (inclusive, None = open)."""
        mask = np.ones(self.n, dtype=bool)
        if t_min is not None:
            mask &= self.t >= t_min
        if t_max is not None:
            mask &= self.t <= t_max
        return TimeSeries(self.origin, self.t[mask].copy(), self.values[mask].copy())


@dataclass(frozen=True)
class LogSeries:
    """log10-transformed counterpart of a :class:`TimeSeries`."""

    origin: date
    t: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", _check_grid(self.t))
        y = _as_readonly(self.y)
        if y.shape != self.t.shape:
            raise PreconditionError("t and y must have equal length")
        if not np.all(np.isfinite(y)):
            raise PreconditionError("y contains non-finite entries")
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.t.size

    def t_of_date(self, d):
        return date_to_t(self.origin, d)

    def restrict(self, t_min=None, t_max=None):
        mask = np.ones(self.n, dtype=bool)
        if t_min is not None:
            mask &= self.t >= t_min
        if t_max is not None:
            mask &= self.t <= t_max
        return LogSeries(self.origin, self.t[mask].copy(), self.y[mask].copy())

    def to_timeseries(self):
        return TimeSeries(self.origin, self.t.copy(), 10.0 ** self.y)


def log10_transform(series):
    """LogSeries with y = log10(value); t and origin preserved.

    Positivity is already enforced by the TimeSeries invariant, but raw
    arrays are re-checked so the error names the offending index.
    """
    v = np.asarray(series.values, dtype=float)
    if np.any(v <= 0):
        bad = int(np.argmax(v <= 0))
        raise PreconditionError(f"non-positive value at index {bad}: {v[bad]!r}")
    return LogSeries(series.origin, series.t.copy(), np.log10(v))


def _parse_date(s):
    s = str(s).strip()
    try:
        return datetime.fromisoformat(s)
    except ValueError as exc:
        raise PreconditionError(f"unparseable ISO-8601 date {s!r}") from exc


def date_to_t(origin, d):
    """Whole-plus-fractional day difference between ``d`` and ``origin``."""
    if isinstance(d, str):
        d = _parse_date(d)
    if isinstance(d, datetime):
        delta = d - datetime(origin.year, origin.month, origin.day)
        return delta.days + delta.seconds / 86400.0
    return float((d - origin).days)


def read_series_csv(path, origin=None):
    """Read a ``date,value`` CSV into a :class:`TimeSeries`.

    Dates are ISO-8601; ``origin`` sets t0 (defaults to the first
    observation's date, giving t starting at 0).  Rows are sorted by date;
    duplicate dates are an error.
    """
    df = pd.read_csv(path)
    if df.shape[1] < 2:
        raise PreconditionError(f"{path}: expected columns date,value")
    dcol, vcol = df.columns[0], df.columns[1]
    stamps = [_parse_date(s) for s in df[dcol]]
    values = np.asarray(df[vcol], dtype=float)
    order = np.argsort([s.toordinal() + s.hour / 24.0 for s in stamps], kind="stable")
    stamps = [stamps[i] for i in order]
    values = values[order]
    if origin is None:
        origin = stamps[0].date()
    elif isinstance(origin, str):
        origin = _parse_date(origin).date()
    t = np.array([date_to_t(origin, s) for s in stamps], dtype=float)
    if np.any(np.diff(t) <= 0):
        raise PreconditionError(f"{path}: duplicate or non-increasing dates")
    return TimeSeries(origin, t, values)


def read_sample_csv(path):
    """Read a one-column (or ``date,value``) CSV into a plain value array."""
    df = pd.read_csv(path)
    col = df.columns[-1]
    values = np.asarray(df[col], dtype=float)
    if values.size == 0:
        raise PreconditionError(f"{path}: empty sample")
    if not np.all(np.isfinite(values)):
        raise PreconditionError(f"{path}: non-finite sample values")
    return values


def diff_log(series, max_gap_days=1.5):
    """First differences of ln(value) across consecutive observations.

    Pairs separated by more than ``max_gap_days`` are dropped rather than
    bridged, so weekend closures in trading-day series do not produce
    spurious multi-day returns.  Returns ``(t, dlog)`` with ``t`` taken
    from the later observation of each retained pair.
    """
    t = np.asarray(series.t, dtype=float)
    lv = np.log(np.asarray(series.values, dtype=float))
    dt = np.diff(t)
    keep = dt <= max_gap_days
    return t[1:][keep], np.diff(lv)[keep]


def abs_log_returns(series, max_gap_days=1.5):
    """|ln(P_t / P_{t-1})| over consecutive observations, zeros dropped."""
    _, d = diff_log(series, max_gap_days=max_gap_days)
    r = np.abs(d)
    return r[r > 0]
