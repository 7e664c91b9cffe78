"""Goodness-of-fit metrics and the Vuong likelihood-ratio test.

All fits in the toolkit report the same Gaussian maximum-likelihood
quantities, computed from the residual vector alone:

    sigma_resid = sqrt(SSE / n)
    loglik      = -(n/2) * [ln(2*pi) + ln(SSE/n) + 1]
    AIC         = -2*loglik + 2k
    BIC         = -2*loglik + k*ln(n)

Note the ML variance estimate SSE/n (not SSE/(n-k)).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DegenerateFitError, IdenticalModelsError, PerfectFitError, PreconditionError

__all__ = ["FitMetrics", "VuongResult", "fit_metrics", "gaussian_loglik_points", "vuong_test"]


@dataclass(frozen=True)
class FitMetrics:
    n: int
    k: int
    sse: float
    r2: float
    sigma_resid: float
    loglik: float
    aic: float
    bic: float


@dataclass(frozen=True)
class VuongResult:
    v_stat: float
    p_two_sided: float
    mean_lr: float
    sd_lr: float
    bic_corrected: bool
    k_a: int
    k_b: int


def fit_metrics(residuals, k, sst=None, y=None, sigma2_floor=None):
    """Gaussian ML metrics for a fitted model with ``k`` parameters.

    Parameters
    ----------
    residuals : array_like
        Fit residuals, y - yhat.
    k : int
        Number of fitted parameters.
    sst : float, optional
        Total sum of squares for the R^2 denominator.  Alternatively pass
        ``y`` and the variance about its mean is used.  If neither is
        given, r2 is NaN.
    sigma2_floor : float, optional
        Lower floor applied to the ML variance estimate.  With the
        default (None) a zero-SSE fit raises :class:`PerfectFitError`;
        model-comparison code passes a tiny floor so interpolating fits
        are flagged instead of fatal.
    """
    r = np.asarray(residuals, dtype=float)
    if r.ndim != 1:
        raise PreconditionError("residuals must be 1-D")
    if not np.all(np.isfinite(r)):
        raise PreconditionError("residuals contain non-finite values")
    n = r.size
    k = int(k)
    if n <= k:
        raise DegenerateFitError(f"n={n} observations cannot support k={k} parameters")
    sse = math.fsum(r * r)  # exact summation keeps metrics order-invariant
    sigma2 = sse / n
    if sigma2_floor is not None:
        sigma2 = max(sigma2, float(sigma2_floor))
    elif sse == 0.0:
        raise PerfectFitError("SSE is zero: Gaussian log-likelihood is undefined")
    loglik = -0.5 * n * (math.log(2.0 * math.pi) + math.log(sigma2) + 1.0)
    if y is not None and sst is None:
        ya = np.asarray(y, dtype=float)
        sst = float(np.sum((ya - ya.mean()) ** 2))
    r2 = 1.0 - sse / sst if sst else float("nan")
    return FitMetrics(
        n=n,
        k=k,
        sse=sse,
        r2=r2,
        sigma_resid=math.sqrt(sse / n),
        loglik=loglik,
        aic=-2.0 * loglik + 2.0 * k,
        bic=-2.0 * loglik + k * math.log(n),
    )


def gaussian_loglik_points(residuals, sigma2=None):
    """Per-observation Gaussian log-densities at the model's own ML variance."""
    r = np.asarray(residuals, dtype=float)
    if sigma2 is None:
        sigma2 = float(r @ r) / r.size
    if sigma2 <= 0:
        raise PerfectFitError("zero residual variance: pointwise log-likelihoods undefined")
    return -0.5 * (math.log(2.0 * math.pi) + math.log(sigma2) + r * r / sigma2)


def vuong_test(loglik_points_a, loglik_points_b, k_a, k_b, bic_correct=False):
    """Vuong's non-nested likelihood-ratio test on pointwise log-likelihoods.

    v = sqrt(n) * mean(LR) / sd(LR) with LR_i the per-observation
    log-likelihood difference (A minus B); positive v favours model A.
    With ``bic_correct`` the mean LR is shifted by -(k_a - k_b)*ln(n)/(2n),
    the per-observation BIC penalty, which attenuates the advantage of
    the more heavily parameterised model.  Two-sided p from the standard
    normal.
    """
    la = np.asarray(loglik_points_a, dtype=float)
    lb = np.asarray(loglik_points_b, dtype=float)
    if la.shape != lb.shape or la.ndim != 1:
        raise PreconditionError("pointwise log-likelihoods must be equal-length 1-D arrays")
    n = la.size
    if n < 2:
        raise PreconditionError("need at least two observations")
    if not (np.all(np.isfinite(la)) and np.all(np.isfinite(lb))):
        raise PreconditionError("log-likelihood points contain non-finite values")
    lr = la - lb
    mean_lr = float(lr.mean())
    sd_lr = float(lr.std(ddof=1))
    if sd_lr == 0.0:
        raise IdenticalModelsError("models are pointwise indistinguishable (sd of LR is zero)")
    adj = mean_lr
    if bic_correct:
        adj = mean_lr - (k_a - k_b) * math.log(n) / (2.0 * n)
    v = math.sqrt(n) * adj / sd_lr
    p = 2.0 * stats.norm.sf(abs(v))
    return VuongResult(
        v_stat=v,
        p_two_sided=float(p),
        mean_lr=mean_lr,
        sd_lr=sd_lr,
        bic_corrected=bool(bic_correct),
        k_a=int(k_a),
        k_b=int(k_b),
    )
