"""Trend specifications on log10-price and their fits.

Supported forms (parameter layout in parentheses):

    powerlaw        y = alpha*log10(t + s) + c              (alpha, c)
    pure_exp        y = a*t + b                              (a, b)
    quadratic       y = c + a*t + b*t^2                      (c, a, b)
    cubic           y = c + a*t + b*t^2 + d*t^3              (c, a, b, d)
    stretched_exp   y = a + b*t^beta                         (a, b, beta)
    sigmoid_stack   y = b + sum_i L_i / (1 + exp(-k_i*(t - t0_i)))
                    (b, L_1, k_1, t0_1, ..., L_K, k_K, t0_K), sorted by t0
    polynomial      y = sum_j c_j * tt^j, tt = t rescaled to [-1, 1]
    bspline         cubic B-spline, coefficients per basis function

Linear-in-parameters forms are solved exactly by least squares; the
stretched exponential by a profile search over the shape (the offset and
scale are linear at fixed shape); the sigmoid stack by multi-start damped
Gauss-Newton with amplitudes and slopes kept positive through a softplus
reparameterisation.
"""

import math
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import BSpline
from scipy.special import expit

from .errors import (
    FitFailedError,
    PreconditionError,
    SingularDesignError,
    UnsupportedFormError,
)
from .metrics import FitMetrics, fit_metrics, gaussian_loglik_points, vuong_test
from .nls import levenberg_marquardt
from .rng import rng_from

__all__ = [
    "TrendSpec",
    "TrendFit",
    "ShiftSweepRow",
    "DEFAULT_SHIFT_GRID",
    "parse_form",
    "param_count",
    "fit_trend",
    "predict_trend",
    "shift_sweep",
    "compare_trends",
    "vuong_trends",
    "stretched_exp_effective_exponent",
]

LINEAR_FORMS = ("powerlaw", "pure_exp", "quadratic", "cubic", "polynomial", "bspline")
NONLINEAR_FORMS = ("stretched_exp", "sigmoid_stack")

DEFAULT_SHIFT_GRID = (0.0, 30.0, 60.0, 120.0, 240.0, 365.0, 500.0, 1000.0, 2000.0, 5000.0)

SIGMA2_FLOOR = 1e-300  # keeps interpolating fits comparable instead of fatal


@dataclass(frozen=True)
class TrendSpec:
    form: str
    shift: float = 0.0
    n_components: int = 1
    degree: int = 9
    n_basis: int = 10
    params: Optional[tuple] = None

    def with_params(self, params):
        return TrendSpec(self.form, self.shift, self.n_components, self.degree,
                         self.n_basis, tuple(float(p) for p in params))

    def label(self):
        if self.form == "powerlaw":
            return "powerlaw" if self.shift == 0 else f"powerlaw(s={self.shift:g})"
        if self.form == "sigmoid_stack":
            return f"sigmoid{self.n_components}"
        if self.form == "polynomial":
            return f"poly{self.degree}"
        if self.form == "bspline":
            return f"bspline{self.n_basis}"
        return self.form


@dataclass(frozen=True)
class TrendFit:
    spec: TrendSpec
    metrics: FitMetrics
    residuals: np.ndarray
    fitted: np.ndarray
    train_window: tuple
    converged: bool = True
    n_restarts_used: int = 0
    basis: dict = field(default_factory=dict)
    interpolating: bool = False

    def predict(self, t):
        return predict_trend(self, t)


@dataclass(frozen=True)
class ShiftSweepRow:
    s: float
    alpha: float
    r2: float
    aic: float
    sigma: float


def param_count(spec):
    if spec.form in ("powerlaw", "pure_exp"):
        return 2
    if spec.form in ("quadratic", "stretched_exp"):
        return 3
    if spec.form == "cubic":
        return 4
    if spec.form == "sigmoid_stack":
        return 1 + 3 * spec.n_components
    if spec.form == "polynomial":
        return spec.degree + 1
    if spec.form == "bspline":
        return spec.n_basis
    raise UnsupportedFormError(f"unknown trend form {spec.form!r}")


def parse_form(name):
    """Parse a CLI form name ('powerlaw', 'sigmoid3', 'poly9', ...) to a spec."""
    name = name.strip().lower()
    if name in ("naive",):
        raise UnsupportedFormError(
            "the naive forecast has no residual model; it exists only for forecasting"
        )
    if name in ("powerlaw", "pl"):
        return TrendSpec("powerlaw")
    m = re.fullmatch(r"powerlaw:s=([0-9.]+)", name)
    if m:
        return TrendSpec("powerlaw", shift=float(m.group(1)))
    if name in ("pure_exp", "exp", "exponential"):
        return TrendSpec("pure_exp")
    if name in ("quadratic", "cubic", "stretched_exp"):
        return TrendSpec(name)
    m = re.fullmatch(r"sigmoid(\d+)", name)
    if m:
        return TrendSpec("sigmoid_stack", n_components=int(m.group(1)))
    m = re.fullmatch(r"poly(\d+)", name)
    if m:
        return TrendSpec("polynomial", degree=int(m.group(1)))
    m = re.fullmatch(r"bspline(\d+)", name)
    if m:
        return TrendSpec("bspline", n_basis=int(m.group(1)))
    raise UnsupportedFormError(f"unknown trend form {name!r}")


# ---------------------------------------------------------------------------
# linear-in-parameters forms


def _bspline_knots(t, n_basis):
    if n_basis < 5:
        raise PreconditionError("cubic B-spline needs at least 5 basis functions")
    n_interior = n_basis - 4
    qs = np.linspace(0.0, 1.0, n_interior + 2)[1:-1]
    interior = np.quantile(t, qs)
    lo, hi = float(t[0]), float(t[-1])
    hi_pad = hi + max(1e-9, 1e-12 * abs(hi))  # keep the right edge inside the support
    return np.concatenate([[lo] * 4, interior, [hi_pad] * 4])


def _design_matrix(spec, t, basis):
    if spec.form == "powerlaw":
        if np.any(t + spec.shift <= 0):
            raise PreconditionError(f"t + s must be positive (s={spec.shift})")
        return np.column_stack([np.log10(t + spec.shift), np.ones_like(t)])
    if spec.form == "pure_exp":
        return np.column_stack([t, np.ones_like(t)])
    if spec.form == "quadratic":
        return np.column_stack([np.ones_like(t), t, t**2])
    if spec.form == "cubic":
        return np.column_stack([np.ones_like(t), t, t**2, t**3])
    if spec.form == "polynomial":
        lo, hi = basis["t_lo"], basis["t_hi"]
        tt = 2.0 * (t - lo) / (hi - lo) - 1.0
        return np.vander(tt, spec.degree + 1, increasing=True)
    if spec.form == "bspline":
        dm = BSpline.design_matrix(t, basis["knots"], 3, extrapolate=True)
        return np.asarray(dm.todense())
    raise UnsupportedFormError(f"{spec.form} has no linear design")


def _fit_linear(spec, t, y):
    basis = {}
    if spec.form == "polynomial":
        basis = {"t_lo": float(t[0]), "t_hi": float(t[-1])}
    elif spec.form == "bspline":
        basis = {"knots": _bspline_knots(t, spec.n_basis)}
    X = _design_matrix(spec, t, basis)
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise SingularDesignError(
            f"rank-deficient design for {spec.label()} (rank {rank} < {X.shape[1]})"
        )
    fitted = X @ coef
    return coef, fitted, basis


# ---------------------------------------------------------------------------
# stretched exponential: profile the shape, offset/scale are linear


def _stretched_sse(beta, t, y):
    z = t**beta
    X = np.column_stack([np.ones_like(t), z])
    coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ coef
    return float(r @ r), coef


def _fit_stretched_exp(t, y, n_grid=80):
    if np.any(t <= 0):
        raise PreconditionError("stretched exponential requires positive t")
    log_betas = np.linspace(math.log(1e-7), math.log(2.0), n_grid)
    sses = np.array([_stretched_sse(math.exp(lb), t, y)[0] for lb in log_betas])
    j = int(np.argmin(sses))
    lo = log_betas[max(j - 1, 0)]
    hi = log_betas[min(j + 1, n_grid - 1)]
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(lambda lb: _stretched_sse(math.exp(lb), t, y)[0],
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    cand = [(float(res.fun), float(res.x)), (float(sses[j]), float(log_betas[j]))]
    _, log_beta = min(cand)
    beta = math.exp(log_beta)
    _, coef = _stretched_sse(beta, t, y)
    params = np.array([coef[0], coef[1], beta])
    fitted = coef[0] + coef[1] * t**beta
    return params, fitted


def stretched_exp_effective_exponent(fit):
    """b * beta * ln(10): the power-law exponent implied in the beta -> 0 limit."""
    a, b, beta = fit.spec.params
    return b * beta * math.log(10.0)


# ---------------------------------------------------------------------------
# sigmoid stack: multi-start damped Gauss-Newton, softplus-positive L and k


def _softplus(u):
    return np.logaddexp(0.0, u)


def _softplus_inv(v):
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore"):
        out = v + np.log1p(-np.exp(-np.clip(v, 1e-300, None)))
    small = v < 1e-8
    if np.any(small):
        out = np.where(small, np.log(np.clip(np.expm1(np.clip(v, 1e-300, None)), 1e-300, None)), out)
    return out


def _stack_split(u, K):
    b = u[0]
    rest = u[1:].reshape(K, 3)
    L = _softplus(rest[:, 0])
    k = _softplus(rest[:, 1])
    t0 = rest[:, 2]
    return b, L, k, t0


def _stack_internal(params_ext, K):
    p = np.asarray(params_ext, dtype=float)
    u = np.empty_like(p)
    u[0] = p[0]
    comp = p[1:].reshape(K, 3)
    u_comp = np.column_stack([
        _softplus_inv(np.clip(comp[:, 0], 1e-12, None)),
        _softplus_inv(np.clip(comp[:, 1], 1e-12, None)),
        comp[:, 2],
    ])
    u[1:] = u_comp.ravel()
    return u


def _stack_external(u, K):
    b, L, k, t0 = _stack_split(u, K)
    order = np.argsort(t0, kind="stable")
    out = [b]
    for i in order:
        out.extend([L[i], k[i], t0[i]])
    return np.array(out)


def _stack_eval(u, K, t):
    b, L, k, t0 = _stack_split(u, K)
    z = expit(k[:, None] * (t[None, :] - t0[:, None]))
    return b + L @ z, z, L, k, t0


def _stack_residual(u, K, t, y):
    f, _, _, _, _ = _stack_eval(u, K, t)
    return y - f


def _stack_jacobian(u, K, t, y, z_cache=None):
    rest = u[1:].reshape(K, 3)
    if z_cache is not None:
        z, L, k, t0 = z_cache
    else:
        _, z, L, k, t0 = _stack_eval(u, K, t)
    n = t.size
    J = np.empty((n, 1 + 3 * K))
    J[:, 0] = 1.0
    zz = z * (1.0 - z)
    sig_uL = expit(rest[:, 0])
    sig_uk = expit(rest[:, 1])
    for i in range(K):
        J[:, 1 + 3 * i] = z[i] * sig_uL[i]
        J[:, 2 + 3 * i] = L[i] * zz[i] * (t - t0[i]) * sig_uk[i]
        J[:, 3 + 3 * i] = -L[i] * zz[i] * k[i]
    return J


def _sigmoid_starts(t, y, K, n_restarts, seed):
    t_lo, t_hi = float(t[0]), float(t[-1])
    t_range = t_hi - t_lo
    y_lo, y_hi = float(np.min(y)), float(np.max(y))
    y_range = max(y_hi - y_lo, 1e-6)
    base_q = np.arange(1, K + 1) / (K + 1.0)
    starts = []
    for ri in range(n_restarts):
        rng = rng_from(seed, "sigmoid-start", ri)
        k0 = (2.0 if ri % 2 == 0 else 8.0) / t_range
        if ri < 2:
            q = base_q
            L0 = np.full(K, y_range / K)
            b0 = y_lo
            kv = np.full(K, k0)
        else:
            q = np.clip(base_q + rng.uniform(-0.5, 0.5, K) / (K + 1.0), 0.02, 0.98)
            L0 = (y_range / K) * np.exp(rng.normal(0.0, 0.4, K))
            b0 = y_lo + rng.normal(0.0, 0.1 * y_range)
            kv = k0 * np.exp(rng.normal(0.0, 0.5, K))
        t0 = t_lo + np.sort(q) * t_range
        ext = [b0]
        for i in range(K):
            ext.extend([L0[i], kv[i], t0[i]])
        starts.append(np.array(ext))
    return starts


def _fit_sigmoid_stack(t, y, K, seed=0, n_restarts=16, init=None,
                       max_iter=500, rel_tol=1e-10):
    if init is not None:
        starts = [np.asarray(init, dtype=float)]
    else:
        starts = _sigmoid_starts(t, y, K, n_restarts, seed)

    # the optimiser asks for the jacobian right after the residual at the
    # same point, so cache the sigmoid evaluations from the residual call
    cache = {}

    def residual(u):
        f, z, L, k, t0 = _stack_eval(u, K, t)
        cache["key"] = u.tobytes()
        cache["z"] = (z, L, k, t0)
        return y - f

    def jacobian(u):
        z_cache = cache["z"] if cache.get("key") == u.tobytes() else None
        return _stack_jacobian(u, K, t, y, z_cache=z_cache)

    best = None
    used = 0
    for start in starts:
        used += 1
        res = levenberg_marquardt(residual, jacobian, _stack_internal(start, K),
                                  max_iter=max_iter, rel_tol=rel_tol)
        if best is None or (res.converged and not best.converged) or (
            res.converged == best.converged and res.sse < best.sse
        ):
            best = res
    if best is None or not np.isfinite(best.sse):
        raise FitFailedError("sigmoid stack fit failed from every start",
                             last_iterate=None if best is None else _stack_external(best.x, K))
    if not best.converged:
        raise FitFailedError(
            f"sigmoid stack did not converge in {max_iter} iterations from any of "
            f"{used} starts", last_iterate=_stack_external(best.x, K),
        )
    params = _stack_external(best.x, K)
    f, _, _, _, _ = _stack_eval(_stack_internal(params, K), K, t)
    return params, f, used


def _sigmoid_predict(params, K, t):
    p = np.asarray(params, dtype=float)
    b = p[0]
    comp = p[1:].reshape(K, 3)
    z = expit(comp[:, 1][:, None] * (t[None, :] - comp[:, 2][:, None]))
    return b + comp[:, 0] @ z


# ---------------------------------------------------------------------------
# public fitting API


def fit_trend(series, spec, seed=0, n_restarts=16, init=None):
    """Fit a trend specification to a LogSeries.

    ``spec`` may be a TrendSpec or a form name understood by
    :func:`parse_form`.  For the sigmoid stack, ``init`` warm-starts the
    optimiser from an external parameter vector instead of multi-start.
    """
    if isinstance(spec, str):
        spec = parse_form(spec)
    t = np.asarray(series.t, dtype=float)
    y = np.asarray(series.y, dtype=float)
    k = param_count(spec)
    if t.size < k + 2:
        raise PreconditionError(f"{spec.label()}: need n >= {k + 2} points, got {t.size}")

    n_restarts_used = 0
    basis = {}
    if spec.form in LINEAR_FORMS:
        coef, fitted, basis = _fit_linear(spec, t, y)
        params = coef
        converged = True
    elif spec.form == "stretched_exp":
        params, fitted = _fit_stretched_exp(t, y)
        converged = True
    elif spec.form == "sigmoid_stack":
        params, fitted, n_restarts_used = _fit_sigmoid_stack(
            t, y, spec.n_components, seed=seed, n_restarts=n_restarts, init=init
        )
        converged = True
    else:
        raise UnsupportedFormError(f"unknown trend form {spec.form!r}")

    residuals = y - fitted
    m = fit_metrics(residuals, k, y=y, sigma2_floor=SIGMA2_FLOOR)
    return TrendFit(
        spec=spec.with_params(params),
        metrics=m,
        residuals=residuals,
        fitted=fitted,
        train_window=(float(t[0]), float(t[-1])),
        converged=converged,
        n_restarts_used=n_restarts_used,
        basis=basis,
        interpolating=m.sigma_resid < 1e-10,  # machine-level residuals
    )


def predict_trend(fit, t):
    """Evaluate a fitted trend at arbitrary times (extrapolation allowed)."""
    spec = fit.spec
    t = np.atleast_1d(np.asarray(t, dtype=float))
    p = np.asarray(spec.params, dtype=float)
    if spec.form == "powerlaw":
        return p[0] * np.log10(t + spec.shift) + p[1]
    if spec.form == "pure_exp":
        return p[0] * t + p[1]
    if spec.form in ("quadratic", "cubic"):
        return np.vander(t, p.size, increasing=True) @ p
    if spec.form == "polynomial":
        lo, hi = fit.basis["t_lo"], fit.basis["t_hi"]
        tt = 2.0 * (t - lo) / (hi - lo) - 1.0
        return np.vander(tt, p.size, increasing=True) @ p
    if spec.form == "bspline":
        return BSpline(fit.basis["knots"], p, 3, extrapolate=True)(t)
    if spec.form == "stretched_exp":
        return p[0] + p[1] * t ** p[2]
    if spec.form == "sigmoid_stack":
        return _sigmoid_predict(p, spec.n_components, t)
    raise UnsupportedFormError(f"unknown trend form {spec.form!r}")


def shift_sweep(series, grid=DEFAULT_SHIFT_GRID):
    """One power-law fit per time-origin shift; each row is independent."""
    grid = [float(s) for s in grid]
    if not grid:
        raise PreconditionError("shift grid must be non-empty")
    if any(s < 0 for s in grid):
        raise PreconditionError("shifts must be >= 0")
    rows = []
    for s in grid:
        try:
            f = fit_trend(series, TrendSpec("powerlaw", shift=s))
        except (PreconditionError, SingularDesignError) as exc:
            raise type(exc)(f"shift s={s}: {exc}") from exc
        rows.append(ShiftSweepRow(s=s, alpha=f.spec.params[0], r2=f.metrics.r2,
                                  aic=f.metrics.aic, sigma=f.metrics.sigma_resid))
    return rows


def compare_trends(series, forms, seed=0, n_restarts=16):
    """Fit each form and tabulate AIC/BIC deltas against the power law.

    The power law is always included as the reference row.  A fit failure
    marks its row failed without aborting the rest.  Rows are sorted by
    AIC with ties resolved toward fewer parameters.
    """
    specs = [parse_form(f) if isinstance(f, str) else f for f in forms]
    if len(specs) < 2:
        raise PreconditionError("comparison needs at least 2 forms")
    if not any(s.form == "powerlaw" and s.shift == 0 for s in specs):
        specs.insert(0, TrendSpec("powerlaw"))

    rows = {}
    fits = {}
    for spec in specs:
        label = spec.label()
        try:
            fit = fit_trend(series, spec, seed=seed, n_restarts=n_restarts)
            fits[label] = fit
            rows[label] = {
                "form": label,
                "k": fit.metrics.k,
                "r2": fit.metrics.r2,
                "sigma": fit.metrics.sigma_resid,
                "loglik": fit.metrics.loglik,
                "aic": fit.metrics.aic,
                "bic": fit.metrics.bic,
                "params": list(fit.spec.params),
                "failed": False,
            }
        except (PreconditionError, FitFailedError, SingularDesignError) as exc:
            rows[label] = {"form": label, "failed": True, "error": str(exc)}

    ref = rows.get("powerlaw")
    if ref is None or ref.get("failed"):
        raise FitFailedError("power-law reference fit failed; no comparison possible")
    for row in rows.values():
        if not row.get("failed"):
            row["delta_aic"] = row["aic"] - ref["aic"]
            row["delta_bic"] = row["bic"] - ref["bic"]

    ordered = sorted(
        rows.values(),
        key=lambda r: (r.get("failed", False), r.get("aic", np.inf), r.get("k", np.inf)),
    )
    return {"rows": ordered, "fits": fits, "reference": "powerlaw"}


def vuong_trends(fit_a, fit_b):
    """Vuong comparison of two trend fits on the same training window.

    Pointwise Gaussian log-densities use each model's own ML variance;
    the BIC correction is applied when the parameter counts differ.
    """
    if fit_a.train_window != fit_b.train_window or fit_a.metrics.n != fit_b.metrics.n:
        raise PreconditionError("fits must share the same series and training window")
    la = gaussian_loglik_points(fit_a.residuals)
    lb = gaussian_loglik_points(fit_b.residuals)
    k_a, k_b = fit_a.metrics.k, fit_b.metrics.k
    return vuong_test(la, lb, k_a, k_b, bic_correct=k_a != k_b)
