"""Shared synthetic-data generators for the test suite."""

from datetime import date

import numpy as np
import pytest

from plrigor.series import LogSeries, TimeSeries

ORIGIN = date(2009, 1, 3)


def pareto_sample(n, alpha, x_min=1.0, rng=None):
    """Inverse-CDF draws from a continuous Pareto tail."""
    rng = rng or np.random.default_rng(0)
    u = rng.random(n)
    return x_min * u ** (-1.0 / (alpha - 1.0))


def ar1_noise(n, rho, sigma_marginal, rng):
    """Stationary AR(1) path with the given marginal standard deviation."""
    eps = np.empty(n)
    eps[0] = rng.normal(0.0, sigma_marginal)
    sigma_eta = sigma_marginal * np.sqrt(1.0 - rho**2)
    innov = rng.normal(0.0, sigma_eta, n - 1)
    for i in range(1, n):
        eps[i] = rho * eps[i - 1] + innov[i - 1]
    return eps


def pl_logseries(n=2000, alpha=5.64, c=-16.0, t_start=600.0, noise=0.0, rho=0.0,
                 seed=0, origin=ORIGIN):
    """LogSeries from an exact power law, optionally plus AR(1) noise."""
    t = t_start + np.arange(n, dtype=float)
    y = alpha * np.log10(t) + c
    if noise > 0:
        rng = np.random.default_rng(seed)
        if rho != 0.0:
            y = y + ar1_noise(n, rho, noise, rng)
        else:
            y = y + rng.normal(0.0, noise, n)
    return LogSeries(origin, t, y)


def sigmoid_stack_y(t, params):
    """Evaluate b + sum L/(1+exp(-k(t-t0))) for params (b, L,k,t0, ...)."""
    p = np.asarray(params, dtype=float)
    b = p[0]
    comp = p[1:].reshape(-1, 3)
    y = np.full_like(t, b, dtype=float)
    for L, k, t0 in comp:
        y = y + L / (1.0 + np.exp(-k * (t - t0)))
    return y


STACK3_PARAMS = (1.0, 1.5, 0.01, 800.0, 1.2, 0.008, 2300.0, 0.8, 0.005, 4100.0)


def sigmoid_logseries(n=4500, params=STACK3_PARAMS, t_start=100.0, noise=0.0,
                      rho=0.0, seed=0, origin=ORIGIN):
    t = t_start + np.arange(n, dtype=float)
    y = sigmoid_stack_y(t, params)
    if noise > 0:
        rng = np.random.default_rng(seed)
        if rho != 0.0:
            y = y + ar1_noise(n, rho, noise, rng)
        else:
            y = y + rng.normal(0.0, noise, n)
    return LogSeries(origin, t, y)


def to_timeseries(ls):
    return TimeSeries(ls.origin, ls.t.copy(), 10.0**ls.y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
