"""Standard time-series forecasting baselines on log10 levels.

Random walk with drift, ARIMA with conditional-sum-of-squares
estimation and AIC grid selection, Holt's linear-trend exponential
smoothing, and a local-linear-trend Kalman filter with ML variances.
All operate on the observation index (daily series yield one step per
day); forecasts are points on the log10 scale.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.signal import lfilter

from .errors import FitFailedError, NumericalFailure, PreconditionError

__all__ = [
    "rw_drift_forecast",
    "ArimaFit",
    "fit_arima_css",
    "select_arima",
    "arima_forecast",
    "DEFAULT_ARIMA_GRID",
    "HoltFit",
    "fit_holt",
    "LltFit",
    "fit_llt",
]


def rw_drift_forecast(t, y, t_target):
    """Random walk with drift: last level plus elapsed days times the
    per-day drift (y_n - y_1)/(t_n - t_1)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 2:
        raise PreconditionError("need at least 2 observations")
    mu_day = (y[-1] - y[0]) / (t[-1] - t[0])
    return y[-1] + (np.asarray(t_target, dtype=float) - t[-1]) * mu_day


# ---------------------------------------------------------------------------
# ARIMA via conditional sum of squares

DEFAULT_ARIMA_GRID = tuple(
    (p, d, q) for p in range(4) for d in range(3) for q in range(4)
)


def _constrain(raw):
    """Map unconstrained reals to a stationary AR / invertible MA vector
    through the partial-autocorrelation transform."""
    if raw.size == 0:
        return raw
    from statsmodels.tsa.statespace.tools import constrain_stationary_univariate

    return constrain_stationary_univariate(raw)


@dataclass(frozen=True)
class ArimaFit:
    order: tuple
    const: float
    ar: np.ndarray
    ma: np.ndarray
    sigma2: float
    loglik: float
    aic: float
    n_eff: int
    w_tail: np.ndarray = field(repr=False)   # last p differenced values
    e_tail: np.ndarray = field(repr=False)   # last q CSS residuals
    y_heads: tuple = ()                      # last level of each integration stage


def _css_sse(w, const, phi, theta):
    """CSS residuals of the intercept-form ARMA recursion, conditioning
    on the first p observations and zero pre-sample shocks."""
    p, q = phi.size, theta.size
    u = w - const
    if p:
        u = u[p:] - sum(phi[i] * w[p - 1 - i : w.size - 1 - i] for i in range(p))
    e = lfilter([1.0], np.concatenate([[1.0], theta]), u) if q else u
    return float(e @ e), e


def _css_objective(w, p, q, with_const):
    def unpack(params):
        i = 0
        const = params[0] if with_const else 0.0
        i += int(with_const)
        phi = _constrain(np.asarray(params[i : i + p]))
        theta = _constrain(np.asarray(params[i + p : i + p + q]))
        return const, phi, theta

    def nll(params):
        const, phi, theta = unpack(params)
        try:
            sse, _ = _css_sse(w, const, phi, theta)
        except (ValueError, FloatingPointError):
            return np.inf
        if not math.isfinite(sse) or sse <= 0:
            return np.inf
        return sse

    return unpack, nll


def fit_arima_css(y, order, with_const=None):
    """Conditional-sum-of-squares ARIMA fit on a level series.

    The series is differenced ``d`` times; AR/MA parameters are kept
    stationary/invertible through the PACF transform and estimated by
    minimising the conditional sum of squares.  A constant is included
    for d <= 1 unless overridden.  The Gaussian CSS log-likelihood and
    AIC use the effective sample (n - d - p).
    """
    p, d, q = order
    y = np.asarray(y, dtype=float)
    heads = []
    w = y
    for _ in range(d):
        heads.append(float(w[-1]))
        w = np.diff(w)
    if with_const is None:
        with_const = d <= 1
    if w.size < p + q + 5:
        raise PreconditionError(f"series too short for ARIMA{order}")

    n_par = int(with_const) + p + q
    if n_par == 0:
        const = 0.0
        phi = np.empty(0)
        theta = np.empty(0)
        sse, e = _css_sse(w, 0.0, phi, theta)
    else:
        unpack, nll = _css_objective(w, p, q, with_const)
        x0 = np.zeros(n_par)
        if with_const:
            x0[0] = float(w.mean())
        res = optimize.minimize(nll, x0, method="Nelder-Mead",
                                options={"xatol": 1e-8, "fatol": 1e-10,
                                         "maxiter": 400 * max(n_par, 1),
                                         "maxfev": 400 * max(n_par, 1)})
        if not math.isfinite(res.fun):
            raise FitFailedError(f"ARIMA{order} CSS optimisation failed", last_iterate=res.x)
        const, phi, theta = unpack(res.x)
        sse, e = _css_sse(w, const, phi, theta)

    n_eff = w.size - p
    if n_eff <= n_par + 1:
        raise PreconditionError(f"too few effective observations for ARIMA{order}")
    sigma2 = sse / n_eff
    if sigma2 <= 0:
        raise NumericalFailure(f"degenerate residual variance for ARIMA{order}")
    loglik = -0.5 * n_eff * (math.log(2 * math.pi) + math.log(sigma2) + 1.0)
    k = n_par + 1  # + innovation variance
    return ArimaFit(
        order=tuple(order),
        const=float(const),
        ar=phi,
        ma=theta,
        sigma2=float(sigma2),
        loglik=float(loglik),
        aic=float(-2.0 * loglik + 2.0 * k),
        n_eff=int(n_eff),
        w_tail=w[-max(p, 1):].copy() if p else np.empty(0),
        e_tail=e[-max(q, 1):].copy() if q else np.empty(0),
        y_heads=tuple(heads),
    )


def select_arima(y, grid=DEFAULT_ARIMA_GRID):
    """Exhaustive AIC selection over the order grid.

    Orders whose fit fails are skipped; ties resolve toward fewer
    parameters then lexicographic order.
    """
    fits = []
    for order in grid:
        try:
            fits.append(fit_arima_css(y, order))
        except (PreconditionError, NumericalFailure, FitFailedError):
            continue
    if not fits:
        raise FitFailedError("no ARIMA order could be fit")
    fits.sort(key=lambda f: (f.aic, sum(f.order), f.order))
    return fits[0]


def arima_forecast(fit, steps):
    """Iterate the fitted recursion forward with future shocks at zero,
    then undo the differencing."""
    p, d, q = fit.order
    phi, theta = fit.ar, fit.ma
    w_hist = list(fit.w_tail[-p:]) if p else []
    e_hist = list(fit.e_tail[-q:]) if q else []
    out = np.empty(steps)
    for h in range(steps):
        val = fit.const
        for i in range(1, p + 1):
            val += phi[i - 1] * w_hist[-i]
        for j in range(1, q + 1):
            val += theta[j - 1] * e_hist[-j]
        out[h] = val
        if p:
            w_hist.append(val)
        if q:
            e_hist.append(0.0)
    path = out
    for head in reversed(fit.y_heads):
        path = head + np.cumsum(path)
    return path


# ---------------------------------------------------------------------------
# Holt's linear trend (ETS with additive trend, no seasonality)


@dataclass(frozen=True)
class HoltFit:
    alpha: float
    beta: float
    level: float
    trend: float
    sse: float


def _holt_pass(y, alpha, beta):
    level = y[0]
    trend = y[1] - y[0]
    sse = 0.0
    for t in range(1, y.size):
        pred = level + trend
        err = y[t] - pred
        sse += err * err
        new_level = alpha * y[t] + (1.0 - alpha) * (level + trend)
        trend = beta * (new_level - level) + (1.0 - beta) * trend
        level = new_level
    return sse, level, trend


def fit_holt(y):
    """Optimise the two smoothing weights by one-step in-sample SSE; the
    first two observations seed level and slope."""
    y = np.asarray(y, dtype=float)
    if y.size < 10:
        raise PreconditionError("need at least 10 observations")

    def nll(params):
        a = 1.0 / (1.0 + math.exp(-params[0]))
        b = 1.0 / (1.0 + math.exp(-params[1]))
        return _holt_pass(y, a, b)[0]

    res = optimize.minimize(nll, np.array([0.0, -2.0]), method="Nelder-Mead",
                            options={"xatol": 1e-6, "fatol": 1e-10, "maxfev": 400})
    a = 1.0 / (1.0 + math.exp(-res.x[0]))
    b = 1.0 / (1.0 + math.exp(-res.x[1]))
    sse, level, trend = _holt_pass(y, a, b)
    return HoltFit(alpha=float(a), beta=float(b), level=float(level),
                   trend=float(trend), sse=float(sse))


def holt_forecast(fit, steps):
    h = np.arange(1, steps + 1, dtype=float)
    return fit.level + h * fit.trend


# ---------------------------------------------------------------------------
# local linear trend (unobserved components) via Kalman filtering


@dataclass(frozen=True)
class LltFit:
    sigma2_eps: float
    sigma2_level: float
    sigma2_slope: float
    level: float
    slope: float
    loglik: float


def _llt_loglik_and_state(y, q_eps, q_level, q_slope):
    """Kalman prediction-error log-likelihood and final filtered state."""
    n = y.size
    lvl = y[0]
    slp = y[1] - y[0]
    p11, p12, p22 = q_eps + q_level, 0.0, q_eps + q_slope
    ll = 0.0
    for t in range(1, n):
        # predict
        lvl = lvl + slp
        p11 = p11 + 2.0 * p12 + p22 + q_level
        p12 = p12 + p22
        p22 = p22 + q_slope
        # update
        f = p11 + q_eps
        if f <= 0:
            return -np.inf, lvl, slp
        v = y[t] - lvl
        ll -= 0.5 * (math.log(2.0 * math.pi) + math.log(f) + v * v / f)
        k1 = p11 / f
        k2 = p12 / f
        lvl += k1 * v
        slp += k2 * v
        p11_new = p11 * (1.0 - k1)
        p12_new = p12 * (1.0 - k1)
        p22_new = p22 - k2 * p12
        p11, p12, p22 = p11_new, p12_new, p22_new
    return ll, lvl, slp


def fit_llt(y, n_restarts=3):
    """ML variance estimation for the local-linear-trend model.

    The first two observations seed level and slope; the three variance
    components are optimised on the log scale from ``n_restarts``
    deterministic starting points.
    """
    y = np.asarray(y, dtype=float)
    if y.size < 20:
        raise PreconditionError("need at least 20 observations")
    v = float(np.var(np.diff(y))) + 1e-12

    def nll(params):
        q_eps, q_level, q_slope = np.exp(np.clip(params, -40.0, 40.0))
        ll, _, _ = _llt_loglik_and_state(y, q_eps, q_level, q_slope)
        return -ll

    starts = [
        np.log([v, v / 10.0, v / 1000.0]),
        np.log([v / 10.0, v, v / 100.0]),
        np.log([v, v, v / 10000.0]),
    ][:n_restarts]
    best = None
    for x0 in starts:
        res = optimize.minimize(nll, x0, method="Nelder-Mead",
                                options={"xatol": 1e-6, "fatol": 1e-8, "maxfev": 300})
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not math.isfinite(best.fun):
        raise FitFailedError("local-linear-trend ML failed", last_iterate=None)
    q_eps, q_level, q_slope = np.exp(np.clip(best.x, -40.0, 40.0))
    ll, lvl, slp = _llt_loglik_and_state(y, q_eps, q_level, q_slope)
    return LltFit(sigma2_eps=float(q_eps), sigma2_level=float(q_level),
                  sigma2_slope=float(q_slope), level=float(lvl), slope=float(slp),
                  loglik=float(ll))


def llt_forecast(fit, steps):
    h = np.arange(1, steps + 1, dtype=float)
    return fit.level + h * fit.slope
