"""Parametric bootstraps under a trend-plus-AR(1) null.

Three pieces live here: calibration and simulation of the AR(1) residual
model; the residual-diagnostics goodness-of-fit bootstrap (are the
observed regression pathologies reproduced by the null generator?); and
the K-component wave-stability bootstrap (are the fitted sigmoid
amplitudes more stable across rolling cutoffs than the null produces?).

Every replicate draws from a child stream derived from (seed, label,
replicate index), so results are bit-for-bit reproducible and invariant
to evaluation order.
"""

import math
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from .bootreport import BootstrapReport, bootstrap_p
from .diagnostics import residual_diagnostics
from .errors import FitFailedError, NumericalFailure, PreconditionError
from .metrics import fit_metrics
from .rng import derive_seed, rng_from
from .series import LogSeries
from .trend import TrendSpec, fit_trend

__all__ = [
    "AR1Noise",
    "BootstrapReport",
    "WaveStabilityResult",
    "calibrate_ar1",
    "simulate_ar1",
    "simulate_pl_ar1",
    "simulate_sigmoid_ar1",
    "gof_bootstrap_diagnostics",
    "wave_stability",
]

DIAGNOSTIC_NAMES = ("ljung_box", "breusch_pagan", "jarque_bera", "shapiro_wilk", "chow")


@dataclass(frozen=True)
class AR1Noise:
    rho: float
    sigma_marginal: float
    clamped: bool = False

    @property
    def sigma_innovation(self):
        return self.sigma_marginal * math.sqrt(1.0 - self.rho**2)


def calibrate_ar1(residuals):
    """AR(1) persistence and marginal spread of a residual series.

    rho is the lag-1 autocorrelation and sigma the sample standard
    deviation.  A numerically out-of-range rho is clamped to +-(1 - 1e-6)
    and flagged.
    """
    r = np.asarray(residuals, dtype=float)
    if r.size < 10:
        raise PreconditionError("need at least 10 residuals to calibrate")
    c = r - r.mean()
    denom = float(c @ c)
    if denom == 0.0:
        raise NumericalFailure("constant residuals: AR(1) calibration degenerate")
    rho = float(c[1:] @ c[:-1]) / denom
    sigma = float(r.std(ddof=1))
    clamped = False
    if abs(rho) >= 1.0 - 1e-6:
        rho = math.copysign(1.0 - 1e-6, rho)
        clamped = True
    return AR1Noise(rho=rho, sigma_marginal=sigma, clamped=clamped)


def simulate_ar1(noise, n, rng):
    """Stationary AR(1) path: eps_0 ~ N(0, sigma^2), innovations scaled to
    keep the marginal variance constant."""
    eps = np.empty(n)
    eps[0] = rng.normal(0.0, noise.sigma_marginal)
    innov = rng.normal(0.0, noise.sigma_innovation, n - 1)
    rho = noise.rho
    for i in range(1, n):
        eps[i] = rho * eps[i - 1] + innov[i - 1]
    return eps


def simulate_pl_ar1(pl_fit, noise, t_grid, seed, origin=None):
    """Synthetic log-series: the fitted power-law trend plus AR(1) noise
    on the given (possibly irregular) t grid."""
    if pl_fit.spec.form != "powerlaw":
        raise PreconditionError("generator trend must be a power-law fit")
    t = np.asarray(t_grid, dtype=float)
    alpha, c = pl_fit.spec.params
    y = alpha * np.log10(t + pl_fit.spec.shift) + c
    y = y + simulate_ar1(noise, t.size, rng_from(seed, "pl-ar1"))
    return LogSeries(origin or date(1970, 1, 1), t, y)


def simulate_sigmoid_ar1(params, t_grid, noise, seed, origin=None):
    """Synthetic log-series from a sigmoid stack plus AR(1) noise
    (negative-control generator)."""
    from .trend import _sigmoid_predict

    t = np.asarray(t_grid, dtype=float)
    p = np.asarray(params, dtype=float)
    K = (p.size - 1) // 3
    y = _sigmoid_predict(p, K, t) + simulate_ar1(noise, t.size, rng_from(seed, "sig-ar1"))
    return LogSeries(origin or date(1970, 1, 1), t, y)


def _default_chow_breaks(t):
    return np.quantile(t, np.arange(1, 7) / 7.0)


def _pathology_statistics(series, fit, lb_lags, sw_cap, chow_breaks):
    """Orient every diagnostic so that larger = more pathological."""
    out = residual_diagnostics(series, fit, lb_lags=lb_lags, sw_cap=sw_cap,
                               chow_breaks=chow_breaks)
    return {
        "ljung_box": out["ljung_box"].statistic,
        "breusch_pagan": out["breusch_pagan"].statistic,
        "jarque_bera": out["jarque_bera"].statistic,
        "shapiro_wilk": 1.0 - out["shapiro_wilk"].statistic,
        "chow": out["chow"].statistic,
    }


def gof_bootstrap_diagnostics(series, B, seed=0, lb_lags=50, sw_cap=5000,
                              chow_breaks=None, shift=0.0, noise=None):
    """Adaptation of the goodness-of-fit bootstrap to residual diagnostics.

    Fits the power law to the series, calibrates AR(1) noise on its
    residuals (unless ``noise`` overrides the null), simulates B
    trajectories of trend-plus-noise on the same t grid, refits the power
    law to each, and computes the same residual diagnostics.  Each
    diagnostic gets the weak-inequality bootstrap p-value; the
    Shapiro-Wilk statistic enters as 1 - W so that larger always means
    more pathological, and the Chow statistic is the count of candidate
    breaks rejecting at the 5% level.
    """
    if B < 1:
        raise PreconditionError("B must be >= 1")
    spec = TrendSpec("powerlaw", shift=shift)
    fit = fit_trend(series, spec)
    if noise is None:
        noise = calibrate_ar1(fit.residuals)
    if chow_breaks is None:
        chow_breaks = _default_chow_breaks(series.t)

    observed = _pathology_statistics(series, fit, lb_lags, sw_cap, chow_breaks)
    synthetic = {name: np.empty(B) for name in observed}
    for b in range(B):
        sim = simulate_pl_ar1(fit, noise, series.t, derive_seed(seed, "diag", b),
                              origin=series.origin)
        sim_fit = fit_trend(sim, spec)
        stats_b = _pathology_statistics(sim, sim_fit, lb_lags, sw_cap, chow_breaks)
        for name, value in stats_b.items():
            synthetic[name][b] = value

    reports = {}
    for name in observed:
        reports[name] = BootstrapReport(
            statistic_name=name,
            observed=float(observed[name]),
            synthetic=synthetic[name],
            p_value=bootstrap_p(observed[name], synthetic[name]),
            B=int(B),
            seed=int(seed),
        )
    return reports


# ---------------------------------------------------------------------------
# wave stability


@dataclass(frozen=True)
class WaveStabilityResult:
    cutoff_dates: tuple
    K: int
    B: int
    seed: int
    amplitudes: np.ndarray        # cutoffs x K, NaN rows for failed cutoffs
    inflections: np.ndarray       # cutoffs x K
    cv_per_wave: np.ndarray
    t0_sd_per_wave: np.ndarray
    stable_counts: dict
    p_values: dict
    reports: dict = field(default_factory=dict)
    failed_cutoffs: tuple = ()
    noise: AR1Noise = None

    @property
    def stable_count_15(self):
        return self.stable_counts[0.15]

    @property
    def stable_count_25(self):
        return self.stable_counts[0.25]

    @property
    def p_15(self):
        return self.p_values[0.15]

    @property
    def p_25(self):
        return self.p_values[0.25]


def _fit_stack_over_cutoffs(t, y, cutoff_ts, K, fit_seed, n_restarts, warm_start,
                            min_points, lm_max_iter=500):
    """Sequential K-stack fits at each cutoff, warm-started along the way.

    Returns (amplitude matrix, inflection matrix, failed indices).
    """
    n_cut = len(cutoff_ts)
    amps = np.full((n_cut, K), np.nan)
    t0s = np.full((n_cut, K), np.nan)
    failed = []
    prev_params = None
    spec = TrendSpec("sigmoid_stack", n_components=K)
    for i, ct in enumerate(cutoff_ts):
        mask = t < ct
        n_train = int(np.count_nonzero(mask))
        if n_train < min_points:
            failed.append(i)
            continue
        sub_t, sub_y = t[mask], y[mask]
        sub = LogSeries(date(1970, 1, 1), sub_t, sub_y)
        fit = None
        try:
            if warm_start and prev_params is not None:
                fit = fit_trend(sub, spec, init=prev_params, n_restarts=0)
        except FitFailedError:
            fit = None
        if fit is None:
            try:
                fit = fit_trend(sub, spec, seed=derive_seed(fit_seed, "cutoff", i),
                                n_restarts=n_restarts)
            except FitFailedError:
                failed.append(i)
                prev_params = None
                continue
        p = np.asarray(fit.spec.params)
        comp = p[1:].reshape(K, 3)
        amps[i] = comp[:, 0]
        t0s[i] = comp[:, 2]
        prev_params = p
    return amps, t0s, failed


def _stability_from_matrix(amps, t0s):
    """Per-wave amplitude CV and inflection-date SD over valid cutoffs."""
    valid = ~np.isnan(amps[:, 0])
    a = amps[valid]
    t0 = t0s[valid]
    mean = a.mean(axis=0)
    sd = a.std(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cv = np.where(mean > 0, sd / mean, np.inf)
    return cv, t0.std(axis=0, ddof=1)


def wave_stability(series, cutoffs, K=3, B=200, seed=0, cv_thresholds=(0.15, 0.25),
                   noise=None, n_restarts=16, warm_start=True, min_train=200,
                   max_failed_frac=0.2):
    """K-component wave-stability bootstrap against a PL+AR(1) null.

    The K-sigmoid stack is fit on the data before each cutoff (warm-started
    from the previous cutoff, components matched by ascending inflection
    date).  A wave is stable at threshold theta when its amplitude
    coefficient of variation across cutoffs is strictly below theta.  The
    same pipeline runs on B synthetic power-law-plus-AR(1) trajectories on
    the identical t grid; p_theta is the fraction of synthetics with at
    least as many stable waves.  A synthetic trajectory that itself fails
    on too many cutoffs is scored conservatively (as if maximally stable).

    ``cutoffs`` is a list of calendar dates (see
    :func:`plrigor.schedule.parse_schedule`); ``noise`` overrides the
    AR(1) model otherwise calibrated from the power-law residuals.
    """
    if B < 1:
        raise PreconditionError("B must be >= 1")
    cutoff_dates = tuple(cutoffs)
    if not cutoff_dates:
        raise PreconditionError("empty cutoff schedule")
    t = np.asarray(series.t, dtype=float)
    y = np.asarray(series.y, dtype=float)
    cutoff_ts = [series.t_of_date(d) for d in cutoff_dates]
    for d, ct in zip(cutoff_dates, cutoff_ts):
        if np.count_nonzero(t < ct) < min_train:
            raise PreconditionError(
                f"cutoff {d} leaves fewer than {min_train} training points"
            )

    pl_fit = fit_trend(series, TrendSpec("powerlaw"))
    if noise is None:
        noise = calibrate_ar1(pl_fit.residuals)

    amps, t0s, failed = _fit_stack_over_cutoffs(
        t, y, cutoff_ts, K, derive_seed(seed, "real"), n_restarts, warm_start, min_train
    )
    if len(failed) > max_failed_frac * len(cutoff_ts):
        raise FitFailedError(
            f"{len(failed)}/{len(cutoff_ts)} cutoffs failed on the observed series",
            last_iterate=None,
        )
    cv, t0_sd = _stability_from_matrix(amps, t0s)
    stable_counts = {th: int(np.count_nonzero(cv < th)) for th in cv_thresholds}

    synthetic_counts = {th: np.empty(B) for th in cv_thresholds}
    for b in range(B):
        sim = simulate_pl_ar1(pl_fit, noise, t, derive_seed(seed, "traj", b),
                              origin=series.origin)
        s_amps, s_t0s, s_failed = _fit_stack_over_cutoffs(
            np.asarray(sim.t), np.asarray(sim.y), cutoff_ts, K,
            derive_seed(seed, "traj-fit", b), n_restarts, warm_start, min_train
        )
        if len(s_failed) > max_failed_frac * len(cutoff_ts):
            for th in cv_thresholds:
                synthetic_counts[th][b] = K  # conservative: maximally stable
            continue
        s_cv, _ = _stability_from_matrix(s_amps, s_t0s)
        for th in cv_thresholds:
            synthetic_counts[th][b] = np.count_nonzero(s_cv < th)

    p_values = {}
    reports = {}
    for th in cv_thresholds:
        p_values[th] = bootstrap_p(stable_counts[th], synthetic_counts[th])
        reports[th] = BootstrapReport(
            statistic_name=f"stable_count_cv<{th:g}",
            observed=float(stable_counts[th]),
            synthetic=synthetic_counts[th],
            p_value=p_values[th],
            B=int(B),
            seed=int(seed),
        )

    return WaveStabilityResult(
        cutoff_dates=cutoff_dates,
        K=int(K),
        B=int(B),
        seed=int(seed),
        amplitudes=amps,
        inflections=t0s,
        cv_per_wave=cv,
        t0_sd_per_wave=t0_sd,
        stable_counts=stable_counts,
        p_values=p_values,
        reports=reports,
        failed_cutoffs=tuple(cutoff_dates[i] for i in failed),
        noise=noise,
    )
