"""Classical residual and stationarity tests.

Each test is a pure function returning a :class:`TestResult`; nothing here
keeps state, so the same functions are reused inside bootstrap replicates.
The ADF p-value comes from statsmodels' MacKinnon (1994, 2010)
response-surface implementation.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import (
    NumericalFailure,
    PreconditionError,
    SingularDesignError,
    UnsupportedFormError,
)
from .trend import LINEAR_FORMS, TrendSpec, _design_matrix, parse_form

__all__ = [
    "TestResult",
    "ljung_box",
    "breusch_pagan",
    "jarque_bera",
    "shapiro_wilk",
    "chow_test",
    "adf_test",
    "residual_diagnostics",
]


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    p_value: float
    df_or_lags: int
    aux: dict = field(default_factory=dict)


def _autocorrelations(x, h):
    x = x - x.mean()
    denom = float(x @ x)
    if denom == 0.0:
        raise NumericalFailure("constant residuals: autocorrelation undefined")
    n = x.size
    return np.array([float(x[k:] @ x[: n - k]) / denom for k in range(1, h + 1)])


def ljung_box(residuals, h=50):
    """Ljung-Box joint test of zero autocorrelation at lags 1..h."""
    r = np.asarray(residuals, dtype=float)
    n = r.size
    if not 1 <= h < n:
        raise PreconditionError(f"need 1 <= h < n, got h={h}, n={n}")
    rho = _autocorrelations(r, h)
    k = np.arange(1, h + 1)
    q = n * (n + 2.0) * float(np.sum(rho**2 / (n - k)))
    return TestResult("ljung_box", q, float(stats.chi2.sf(q, h)), h)


def _ols(X, y):
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise SingularDesignError("rank-deficient regression design")
    return coef, y - X @ coef


def breusch_pagan(residuals, regressors):
    """LM heteroscedasticity test: n * R^2 of e^2 on the regressors."""
    e = np.asarray(residuals, dtype=float)
    Z = np.asarray(regressors, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[0] != e.size:
        raise PreconditionError("residuals and regressors must align")
    # drop a constant column if the caller included one; we add our own
    keep = [j for j in range(Z.shape[1]) if np.ptp(Z[:, j]) > 0]
    if len(keep) < Z.shape[1]:
        Z = Z[:, keep]
    if Z.shape[1] == 0:
        raise SingularDesignError("no non-constant regressors for the auxiliary regression")
    X = np.column_stack([np.ones(e.size), Z])
    y = e**2
    _, resid = _ols(X, y)
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        raise NumericalFailure("squared residuals are constant")
    r2 = 1.0 - float(resid @ resid) / sst
    df = Z.shape[1]
    lm = e.size * r2
    return TestResult("breusch_pagan", lm, float(stats.chi2.sf(lm, df)), df)


def jarque_bera(residuals):
    """Skewness/kurtosis normality test; aux carries S and excess K."""
    r = np.asarray(residuals, dtype=float)
    n = r.size
    if n < 8:
        raise PreconditionError("need n >= 8")
    c = r - r.mean()
    m2 = float(np.mean(c**2))
    if m2 == 0.0:
        raise NumericalFailure("constant residuals")
    s = float(np.mean(c**3)) / m2**1.5
    k = float(np.mean(c**4)) / m2**2 - 3.0
    jb = n / 6.0 * (s**2 + k**2 / 4.0)
    return TestResult("jarque_bera", jb, float(stats.chi2.sf(jb, 2)), 2,
                      aux={"skewness": s, "excess_kurtosis": k})


def shapiro_wilk(residuals, cap=5000):
    """Shapiro-Wilk W (Royston approximation via scipy) on at most ``cap``
    points; larger samples are thinned by a deterministic even stride."""
    r = np.asarray(residuals, dtype=float)
    n = r.size
    if n < 3:
        raise PreconditionError("need n >= 3")
    capped = n > cap
    if capped:
        idx = np.unique(np.linspace(0, n - 1, cap).round().astype(int))
        r = r[idx]
    w, p = stats.shapiro(r)
    return TestResult("shapiro_wilk", float(w), float(p), r.size,
                      aux={"cap_applied": capped, "n_used": int(r.size)})


def chow_test(series, spec_form, break_t):
    """Chow F-test for coefficient stability across ``break_t``.

    Applies to linear-in-parameters trend forms only; both segments must
    support the parameter count.
    """
    spec = parse_form(spec_form) if isinstance(spec_form, str) else spec_form
    if spec.form not in LINEAR_FORMS:
        raise UnsupportedFormError(f"Chow test needs a linear-in-parameters form, not {spec.form}")
    t = np.asarray(series.t, dtype=float)
    y = np.asarray(series.y, dtype=float)
    left = t <= break_t
    right = ~left
    from .trend import param_count

    k = param_count(spec)
    if np.count_nonzero(left) < k + 2 or np.count_nonzero(right) < k + 2:
        raise PreconditionError(
            f"both segments need >= {k + 2} points around break_t={break_t}"
        )

    def sse_of(mask):
        basis = {}
        if spec.form == "polynomial":
            basis = {"t_lo": float(t[mask][0]), "t_hi": float(t[mask][-1])}
        elif spec.form == "bspline":
            from .trend import _bspline_knots

            basis = {"knots": _bspline_knots(t[mask], spec.n_basis)}
        X = _design_matrix(spec, t[mask], basis)
        _, resid = _ols(X, y[mask])
        return float(resid @ resid)

    sse_pooled = sse_of(np.ones_like(left))
    sse1 = sse_of(left)
    sse2 = sse_of(right)
    n = t.size
    df2 = n - 2 * k
    f = ((sse_pooled - sse1 - sse2) / k) / ((sse1 + sse2) / df2)
    return TestResult("chow", float(f), float(stats.f.sf(f, k, df2)), k,
                      aux={"break_t": float(break_t), "df2": df2})


def adf_test(series, max_lag=None):
    """Augmented Dickey-Fuller test with constant; lag chosen by AIC.

    ``series`` is a plain value sequence.  The default max lag is the
    Said-Dickey rule floor(12*(n/100)^0.25); p-values use MacKinnon's
    response surface as implemented in statsmodels.
    """
    x = np.asarray(series, dtype=float)
    if x.size < 20:
        raise PreconditionError("need n >= 20 for the ADF test")
    from statsmodels.tsa.stattools import adfuller

    stat, p, usedlag, nobs, _, icbest = adfuller(
        x, maxlag=max_lag, regression="c", autolag="AIC"
    )
    return TestResult("adf", float(stat), float(p), int(usedlag),
                      aux={"nobs": int(nobs), "icbest": float(icbest)})


def residual_diagnostics(series, fit, lb_lags=50, sw_cap=5000, chow_breaks=None):
    """The five residual tests on a trend fit, as one report.

    ``chow_breaks`` is a sequence of break times in days; breaks whose
    segments are too short are skipped.  The Chow entry reports the count
    of breaks rejecting at the 5% level (the bootstrap statistic) along
    with per-break results.
    """
    r = fit.residuals
    X = _design_matrix(fit.spec, np.asarray(series.t, dtype=float), fit.basis)
    nonconst = [j for j in range(X.shape[1]) if np.ptp(X[:, j]) > 0]
    out = {
        "ljung_box": ljung_box(r, h=lb_lags),
        "breusch_pagan": breusch_pagan(r, X[:, nonconst]),
        "jarque_bera": jarque_bera(r),
        "shapiro_wilk": shapiro_wilk(r, cap=sw_cap),
    }
    if chow_breaks is not None:
        per_break = []
        rejections = 0
        for bt in chow_breaks:
            try:
                res = chow_test(series, fit.spec, bt)
            except (PreconditionError, NumericalFailure):
                continue
            per_break.append(res)
            rejections += res.p_value < 0.05
        out["chow"] = TestResult(
            "chow_rejections",
            float(rejections),
            float("nan"),
            len(per_break),
            aux={"breaks": [b.aux["break_t"] for b in per_break],
                 "p_values": [b.p_value for b in per_break]},
        )
    return out
