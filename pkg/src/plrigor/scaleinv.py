"""Scale-invariance tests on a log-price series.

Four tests, each answering "does the series behave like P ~ t^beta?"
from a different angle: random pair ratios, a direct collapse over time
rescalings, rolling-window exponent stability, and a conjugate Bayesian
shrinkage check on the local exponent estimates.  All are diagnostics of
a stable long-run log-log slope; none identifies the power law uniquely
(a multi-component trend with the same envelope passes them too).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import NumericalFailure, PreconditionError
from .rng import rng_from
from .series import LogSeries
from .trend import TrendSpec, fit_trend

__all__ = [
    "PairRatioResult",
    "CollapseResult",
    "RollingBetaResult",
    "BayesUpdateResult",
    "pair_ratio",
    "collapse_beta",
    "rolling_beta",
    "bayes_update",
    "scaleinv_report",
]


@dataclass(frozen=True)
class PairRatioResult:
    binned_slope: float
    r2: float
    quad_curvature: float
    n_pairs: int
    n_bins: int


@dataclass(frozen=True)
class CollapseResult:
    beta_star: float
    residual_slope: float
    max_flat_deviation: float
    curvature_ratio: float
    flagged: bool
    lambdas: np.ndarray
    mean_residuals: np.ndarray


@dataclass(frozen=True)
class RollingBetaResult:
    betas: np.ndarray
    midpoints: np.ndarray
    median: float
    sd: float
    drift_slope: float
    drift_p: float
    pct_above_median: float
    reference_beta: float
    window: float
    stride: float


@dataclass(frozen=True)
class BayesUpdateResult:
    ratios: np.ndarray
    final_ratio: float
    sigma_emp: float


def pair_ratio(series, n_pairs=4000, n_bins=30, seed=0):
    """Regress log price ratios on log time ratios over random pairs.

    Pairs (t1, t2) with t2 > t1 are sampled uniformly; the ratios are
    averaged in ``n_bins`` equal-count bins of log10(t2/t1) and the
    binned means regressed.  A power law of exponent beta gives slope
    beta with zero curvature in a quadratic refit.
    """
    t = np.asarray(series.t, dtype=float)
    y = np.asarray(series.y, dtype=float)
    if t.size < 100:
        raise PreconditionError("need at least 100 observations")
    if t[0] <= 0:
        raise PreconditionError("pair ratios need positive t")
    rng = rng_from(seed, "pair-ratio")
    i = rng.integers(0, t.size, n_pairs)
    j = rng.integers(0, t.size, n_pairs)
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    keep = lo != hi
    lo, hi = lo[keep], hi[keep]
    dx = np.log10(t[hi] / t[lo])
    dy = y[hi] - y[lo]

    order = np.argsort(dx, kind="stable")
    dx, dy = dx[order], dy[order]
    edges = np.linspace(0, dx.size, n_bins + 1).astype(int)
    bx = np.array([dx[a:b].mean() for a, b in zip(edges[:-1], edges[1:])])
    by = np.array([dy[a:b].mean() for a, b in zip(edges[:-1], edges[1:])])

    X = np.column_stack([bx, np.ones_like(bx)])
    coef, _, _, _ = np.linalg.lstsq(X, by, rcond=None)
    resid = by - X @ coef
    sst = float(np.sum((by - by.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / sst if sst > 0 else float("nan")
    Xq = np.column_stack([bx**2, bx, np.ones_like(bx)])
    quad, _, _, _ = np.linalg.lstsq(Xq, by, rcond=None)
    return PairRatioResult(
        binned_slope=float(coef[0]),
        r2=r2,
        quad_curvature=float(quad[0]),
        n_pairs=int(lo.size),
        n_bins=int(n_bins),
    )


def collapse_beta(series, lambda_range=(1.1, 5.0), n_lambda=40, beta_grid=None,
                  flat_tol=0.02, curvature_ratio_tol=2.5):
    """Exponent that flattens the mean rescaling residual.

    For each lambda, the mean over t of log10(P(lambda*t)/P(t)) is
    computed by interpolating y linearly in log10(t); beta* is the grid
    value minimising the absolute slope of (mean residual - beta*log10
    lambda) against log10 lambda.

    The no-flat-beta flag fires when the detrended residual curve is both
    non-negligible (max deviation above ``flat_tol``) and systematically
    curved: a quadratic detrend must shrink the deviation by more than
    ``curvature_ratio_tol``.  Deterministic curvature (exponential
    growth) trips it; irregular wander from autocorrelated noise, which a
    quadratic cannot absorb, does not.
    """
    t = np.asarray(series.t, dtype=float)
    y = np.asarray(series.y, dtype=float)
    if t[0] <= 0:
        raise PreconditionError("collapse needs positive t")
    lam_lo, lam_hi = lambda_range
    if t[-1] / t[0] <= lam_hi:
        raise PreconditionError(
            f"series spans only a x{t[-1] / t[0]:.2f} ratio in t; need > {lam_hi}"
        )
    if beta_grid is None:
        beta_grid = np.arange(0.0, 12.0 + 1e-9, 0.01)
    logt = np.log10(t)
    lambdas = np.geomspace(lam_lo, lam_hi, n_lambda)
    log_lam = np.log10(lambdas)
    mean_resid = np.empty(n_lambda)
    for idx, lam in enumerate(lambdas):
        mask = t * lam <= t[-1]
        if np.count_nonzero(mask) < 10:
            raise PreconditionError("insufficient overlap at the largest rescaling")
        y_scaled = np.interp(logt[mask] + math.log10(lam), logt, y)
        mean_resid[idx] = float(np.mean(y_scaled - y[mask]))

    X = np.column_stack([log_lam, np.ones_like(log_lam)])
    slope_unadj = float(np.linalg.lstsq(X, mean_resid, rcond=None)[0][0])
    j = int(np.argmin(np.abs(slope_unadj - beta_grid)))
    beta_star = float(beta_grid[j])
    lin_resid = mean_resid - X @ np.linalg.lstsq(X, mean_resid, rcond=None)[0]
    Xq = np.column_stack([log_lam**2, log_lam, np.ones_like(log_lam)])
    quad_resid = mean_resid - Xq @ np.linalg.lstsq(Xq, mean_resid, rcond=None)[0]
    max_dev = float(np.max(np.abs(lin_resid)))
    ratio = max_dev / max(float(np.max(np.abs(quad_resid))), 1e-12)
    return CollapseResult(
        beta_star=beta_star,
        residual_slope=slope_unadj - beta_star,
        max_flat_deviation=max_dev,
        curvature_ratio=ratio,
        flagged=max_dev > flat_tol and ratio > curvature_ratio_tol,
        lambdas=lambdas,
        mean_residuals=mean_resid,
    )


def rolling_beta(series, window=1460.0, stride=29.0, min_points=50):
    """Rolling-window power-law exponents and their drift.

    Windows of ``window`` days step by ``stride``; each gets its own
    power-law fit (origin shift 0).  Drift is the OLS slope of the window
    exponents on the window midpoints; because adjacent windows overlap
    by a factor of roughly window/stride, the slope's standard error uses
    a Newey-West correction with that many lags (an IID t-test would
    reject wildly on null data).  ``pct_above_median`` is the fraction of
    window exponents above the full-series exponent (``reference_beta``).
    """
    t = np.asarray(series.t, dtype=float)
    starts = np.arange(t[0], t[-1] - window + 1e-9, stride)
    if starts.size < 10:
        raise PreconditionError(f"only {starts.size} windows; need >= 10")
    full_beta = float(fit_trend(series, TrendSpec("powerlaw")).spec.params[0])

    betas, mids = [], []
    for s in starts:
        mask = (t >= s) & (t < s + window)
        if np.count_nonzero(mask) < min_points:
            continue
        sub = LogSeries(series.origin, t[mask], np.asarray(series.y)[mask])
        betas.append(float(fit_trend(sub, TrendSpec("powerlaw")).spec.params[0]))
        mids.append(s + window / 2.0)
    betas = np.asarray(betas)
    mids = np.asarray(mids)
    if betas.size < 10:
        raise PreconditionError("fewer than 10 usable windows after skipping")

    X = np.column_stack([mids, np.ones_like(mids)])
    coef, _, _, _ = np.linalg.lstsq(X, betas, rcond=None)
    resid = betas - X @ coef
    n_w = betas.size
    overlap = max(1, int(math.ceil(window / stride)))
    L = min(overlap, n_w - 2)
    xc = mids - mids.mean()
    u = xc * resid
    gamma0 = float(u @ u) / n_w
    nw = gamma0
    for lag in range(1, L + 1):
        w = 1.0 - lag / (L + 1.0)
        nw += 2.0 * w * float(u[lag:] @ u[:-lag]) / n_w
    sxx = float(xc @ xc)
    se = math.sqrt(max(nw, 0.0) * n_w) / sxx if sxx > 0 else float("inf")
    t_stat = coef[0] / se if se > 0 else float("inf")
    # few effective observations remain after the overlap correction
    dof = max(2, int(n_w / overlap) - 2)
    drift_p = float(2.0 * stats.t.sf(abs(t_stat), dof))
    return RollingBetaResult(
        betas=betas,
        midpoints=mids,
        median=float(np.median(betas)),
        sd=float(betas.std(ddof=1)),
        drift_slope=float(coef[0]),
        drift_p=drift_p,
        pct_above_median=float(np.mean(betas > full_beta)),
        reference_beta=full_beta,
        window=float(window),
        stride=float(stride),
    )


def bayes_update(local_betas):
    """Conjugate Gaussian shrinkage check on local exponent estimates.

    The prior variance and observation variance are both set to the
    empirical variance of the local estimates; the posterior standard
    deviation after n updates is then sigma_emp/sqrt(n+1), and the
    returned ratios tau_n/(sigma_emp/sqrt(n)) converge to 1 exactly when
    the shrinkage follows the textbook 1/sqrt(n) law.
    """
    b = np.asarray(local_betas, dtype=float)
    if b.size < 10:
        raise PreconditionError("need at least 10 local estimates")
    sigma_emp = float(b.std(ddof=1))
    if sigma_emp < 1e-12 * max(1.0, abs(float(b.mean()))):
        raise NumericalFailure("zero-variance local estimates: prior degenerate")
    n = np.arange(1, b.size + 1, dtype=float)
    tau = sigma_emp / np.sqrt(n + 1.0)
    ratios = tau / (sigma_emp / np.sqrt(n))
    return BayesUpdateResult(ratios=ratios, final_ratio=float(ratios[-1]),
                             sigma_emp=sigma_emp)


def scaleinv_report(series, tests=("pair", "collapse", "rolling", "bayes"),
                    n_pairs=4000, seed=0, window=1460.0, stride=29.0,
                    drift_alpha=0.05):
    """Run the requested tests and attach a pass/fail verdict to each.

    Verdicts: pair passes when the binned regression is effectively
    linear (r2 > 0.99); collapse passes when unflagged; rolling passes
    when drift is insignificant at ``drift_alpha``; bayes passes when the
    final shrinkage ratio is within 5% of 1.
    """
    out = {}
    rolling = None
    if "pair" in tests:
        pr = pair_ratio(series, n_pairs=n_pairs, seed=seed)
        out["pair"] = {"result": pr, "passed": bool(pr.r2 > 0.99)}
    if "collapse" in tests:
        cr = collapse_beta(series)
        out["collapse"] = {"result": cr, "passed": not cr.flagged}
    if "rolling" in tests or "bayes" in tests:
        rolling = rolling_beta(series, window=window, stride=stride)
    if "rolling" in tests:
        out["rolling"] = {"result": rolling, "passed": bool(rolling.drift_p >= drift_alpha)}
    if "bayes" in tests:
        br = bayes_update(rolling.betas)
        out["bayes"] = {"result": br, "passed": bool(abs(br.final_ratio - 1.0) < 0.05)}
    return out
