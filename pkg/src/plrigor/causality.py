"""Granger causality and cross-correlation on differenced log series.

Both tests expect stationary inputs; callers difference log levels first
(:func:`plrigor.series.diff_log`) and can verify stationarity with
:func:`plrigor.diagnostics.adf_test`.  The cross-correlation convention
is rho(k) = corr(x_t, y_{t-k}): a peak at negative k means x leads y.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import NumericalFailure, PreconditionError, SingularDesignError

__all__ = ["GrangerResult", "CcfResult", "granger", "ccf", "align_series"]


@dataclass(frozen=True)
class GrangerResult:
    lag: int
    f_xy: float
    p_xy: float
    f_yx: float
    p_yx: float
    asymmetry: float
    nobs: int


@dataclass(frozen=True)
class CcfResult:
    lags: np.ndarray
    rho: np.ndarray
    peak_lag: int
    peak_rho: float


def _lag_matrix(z, lag, n_out):
    cols = [z[lag - j - 1 : lag - j - 1 + n_out] for j in range(lag)]
    return np.column_stack(cols)


def _ols_sse(X, y):
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise SingularDesignError("collinear design in Granger regression")
    r = y - X @ coef
    return float(r @ r)


def _granger_one_direction(cause, effect, lag):
    n = effect.size
    n_out = n - lag
    y = effect[lag:]
    own = _lag_matrix(effect, lag, n_out)
    other = _lag_matrix(cause, lag, n_out)
    ones = np.ones((n_out, 1))
    sse_r = _ols_sse(np.hstack([ones, own]), y)
    sse_u = _ols_sse(np.hstack([ones, own, other]), y)
    df2 = n_out - 2 * lag - 1
    if df2 <= 0:
        raise PreconditionError("not enough observations for this lag order")
    f = ((sse_r - sse_u) / lag) / (sse_u / df2)
    f = max(f, 0.0)
    return f, float(stats.f.sf(f, lag, df2)), n_out


def granger(x, y, lag):
    """Granger F-tests in both directions at the given lag order.

    ``f_xy`` tests whether lagged x adds predictive content for y beyond
    y's own lags (x -> y); ``asymmetry`` is f_xy / f_yx.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise PreconditionError("x and y must be aligned 1-D arrays")
    if lag < 1:
        raise PreconditionError("lag must be >= 1")
    if x.size <= 3 * lag:
        raise PreconditionError(f"need n > 3*lag (n={x.size}, lag={lag})")
    f_xy, p_xy, nobs = _granger_one_direction(x, y, lag)
    f_yx, p_yx, _ = _granger_one_direction(y, x, lag)
    asym = f_xy / f_yx if f_yx > 0 else float("inf")
    return GrangerResult(lag=int(lag), f_xy=f_xy, p_xy=p_xy, f_yx=f_yx, p_yx=p_yx,
                         asymmetry=asym, nobs=nobs)


def ccf(x, y, max_lag=90):
    """Cross-correlation rho(k) = corr(x_t, y_{t-k}) for |k| <= max_lag.

    Normalisation uses global means and standard deviations with a 1/n
    covariance denominator, so rho(0) of a series with itself is exactly
    1 and |rho| <= 1 throughout.  The peak is the lag with the largest
    absolute correlation (signed value reported).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise PreconditionError("x and y must be aligned 1-D arrays")
    n = x.size
    if n <= 2 * max_lag:
        raise PreconditionError(f"need n > 2*max_lag (n={n}, max_lag={max_lag})")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt(float(xc @ xc) / n)
    sy = np.sqrt(float(yc @ yc) / n)
    if sx == 0.0 or sy == 0.0:
        raise NumericalFailure("zero-variance input series")
    lags = np.arange(-max_lag, max_lag + 1)
    rho = np.empty(lags.size)
    for idx, k in enumerate(lags):
        if k >= 0:
            prod = xc[k:] @ yc[: n - k]
        else:
            prod = xc[: n + k] @ yc[-k:]
        rho[idx] = prod / (n * sx * sy)
    peak_idx = int(np.argmax(np.abs(rho)))
    return CcfResult(lags=lags, rho=rho, peak_lag=int(lags[peak_idx]),
                     peak_rho=float(rho[peak_idx]))


def align_series(t_x, x, t_y, y):
    """Inner-join two (t, value) pairs on exactly matching t."""
    t_x = np.asarray(t_x, dtype=float)
    t_y = np.asarray(t_y, dtype=float)
    common, ix, iy = np.intersect1d(t_x, t_y, return_indices=True)
    if common.size == 0:
        raise PreconditionError("series share no common time points")
    return common, np.asarray(x, dtype=float)[ix], np.asarray(y, dtype=float)[iy]
