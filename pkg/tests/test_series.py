from datetime import date

import numpy as np
import pytest

from plrigor.errors import PreconditionError
from plrigor.series import (
    LogSeries,
    TimeSeries,
    abs_log_returns,
    diff_log,
    log10_transform,
    read_series_csv,
)


def test_log10_values():
    ts = TimeSeries(date(2009, 1, 3), np.array([1.0, 2.0, 3.0]), np.array([100.0, 1.0, 10.0]))
    ls = log10_transform(ts)
    assert ls.y == pytest.approx([2.0, 0.0, 1.0])
    assert ls.origin == ts.origin
    assert np.array_equal(ls.t, ts.t)


def test_log10_roundtrip():
    rng = np.random.default_rng(0)
    v = 10.0 ** rng.uniform(-3, 6, 500)
    ts = TimeSeries(date(2009, 1, 3), np.arange(500, dtype=float) + 1, v)
    back = log10_transform(ts).to_timeseries()
    assert np.allclose(back.values, v, rtol=1e-12)


def test_positive_value_required():
    with pytest.raises(PreconditionError, match="positive"):
        TimeSeries(date(2009, 1, 3), np.array([1.0, 2.0]), np.array([1.0, 0.0]))


def test_strictly_increasing_t_required():
    with pytest.raises(PreconditionError):
        TimeSeries(date(2009, 1, 3), np.array([1.0, 1.0]), np.array([1.0, 2.0]))


def test_arrays_are_immutable():
    ts = TimeSeries(date(2009, 1, 3), np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        ts.values[0] = 5.0


def test_read_series_csv_origin_and_t(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("date,close\n2010-08-18,0.07\n2010-08-19,0.08\n2010-08-21,0.06\n")
    ts = read_series_csv(p, origin="2009-01-03")
    assert ts.origin == date(2009, 1, 3)
    assert ts.t[0] == pytest.approx((date(2010, 8, 18) - date(2009, 1, 3)).days)
    assert np.diff(ts.t).tolist() == [1.0, 2.0]


def test_read_series_csv_sorts_and_defaults_origin(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("date,v\n2020-01-03,3\n2020-01-01,1\n2020-01-02,2\n")
    ts = read_series_csv(p)
    assert ts.origin == date(2020, 1, 1)
    assert ts.values.tolist() == [1.0, 2.0, 3.0]


def test_diff_log_drops_gap_pairs():
    t = np.array([1.0, 2.0, 3.0, 6.0, 7.0])
    v = np.exp(np.array([0.0, 1.0, 3.0, 10.0, 11.0]))
    ts = TimeSeries(date(2020, 1, 1), t, v)
    td, d = diff_log(ts)
    # the 3 -> 6 pair spans a 3-day gap and is dropped
    assert td.tolist() == [2.0, 3.0, 7.0]
    assert d == pytest.approx([1.0, 2.0, 1.0])


def test_abs_log_returns_drops_zeros():
    t = np.arange(5, dtype=float)
    v = np.array([1.0, 2.0, 2.0, 1.0, 3.0])
    ts = TimeSeries(date(2020, 1, 1), t, v)
    r = abs_log_returns(ts)
    assert len(r) == 3
    assert np.all(r > 0)


def test_restrict_window():
    ls = LogSeries(date(2020, 1, 1), np.arange(10, dtype=float) + 1, np.zeros(10))
    sub = ls.restrict(t_min=3, t_max=6)
    assert sub.t.tolist() == [3.0, 4.0, 5.0, 6.0]
