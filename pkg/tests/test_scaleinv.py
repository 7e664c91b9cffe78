import numpy as np
import pytest

from conftest import ORIGIN, pl_logseries, sigmoid_logseries
from plrigor.errors import NumericalFailure, PreconditionError
from plrigor.scaleinv import (
    bayes_update,
    collapse_beta,
    pair_ratio,
    rolling_beta,
    scaleinv_report,
)
from plrigor.series import LogSeries


class TestPairRatio:
    def test_exact_powerlaw_slope(self):
        ls = pl_logseries(n=3000, alpha=5.64, c=-16.0)
        res = pair_ratio(ls, seed=0)
        assert res.binned_slope == pytest.approx(5.64, abs=0.01)
        assert abs(res.quad_curvature) < 0.05
        assert res.r2 > 0.999

    def test_slope_stable_across_seeds_and_sizes(self):
        ls = pl_logseries(n=2000, alpha=3.2, c=-8.0)
        slopes = [pair_ratio(ls, n_pairs=np_, seed=s).binned_slope
                  for np_ in (500, 2000, 4000) for s in (1, 2)]
        assert np.allclose(slopes, 3.2, atol=0.02)

    def test_needs_enough_points(self):
        ls = pl_logseries(n=50)
        with pytest.raises(PreconditionError):
            pair_ratio(ls)


class TestCollapse:
    def test_exact_powerlaw_beta(self):
        ls = pl_logseries(n=4000, alpha=5.60, c=-16.0)
        res = collapse_beta(ls)
        assert res.beta_star == pytest.approx(5.60, abs=0.011)  # grid step
        assert not res.flagged

    def test_exponential_flagged(self):
        t = np.arange(400.0, 4400.0)
        ls = LogSeries(ORIGIN, t, 0.001 * t + 0.2)
        res = collapse_beta(ls)
        assert res.flagged
        assert res.max_flat_deviation > 0.02

    def test_insufficient_span(self):
        t = np.linspace(1000.0, 3000.0, 500)  # only a 3x ratio
        ls = LogSeries(ORIGIN, t, np.log10(t))
        with pytest.raises(PreconditionError):
            collapse_beta(ls)


class TestRollingBeta:
    def test_exact_pl_no_drift(self):
        ps = []
        for seed in range(5):
            ls = pl_logseries(n=5699, alpha=5.64, c=-16.0, noise=0.05, seed=seed)
            res = rolling_beta(ls)
            ps.append(res.drift_p)
        assert np.median(ps) > 0.05

    def test_window_count_matches_design(self):
        ls = pl_logseries(n=5699, alpha=5.64, c=-16.0, noise=0.05, seed=1)
        res = rolling_beta(ls)
        assert 130 <= res.betas.size <= 160

    def test_linear_trend_drifts(self):
        t = np.arange(600.0, 4600.0)
        rng = np.random.default_rng(3)
        ls = LogSeries(ORIGIN, t, 0.0008 * t + rng.normal(0, 0.02, t.size))
        res = rolling_beta(ls, window=800.0, stride=40.0)
        assert res.drift_p < 0.05

    def test_too_few_windows(self):
        ls = pl_logseries(n=300)
        with pytest.raises(PreconditionError):
            rolling_beta(ls, window=250.0, stride=29.0)


class TestBayesUpdate:
    def test_iid_ratio_converges_to_one(self):
        rng = np.random.default_rng(4)
        res = bayes_update(rng.normal(5.6, 0.4, 2000))
        assert res.final_ratio == pytest.approx(1.0, abs=1e-3)
        # monotone convergence toward 1
        assert np.all(np.diff(res.ratios) > 0)
        assert np.all(res.ratios <= 1.0)

    def test_constant_inputs_degenerate(self):
        with pytest.raises(NumericalFailure):
            bayes_update(np.full(100, 5.6))


class TestNonDiscrimination:
    def test_pl_and_sigmoid_fit_both_pass(self):
        # a power law plus AR(1) noise, and a 3-sigmoid stack fit to that
        # same synthetic, both pass all four tests
        from plrigor.trend import fit_trend

        pl_input = pl_logseries(n=5000, alpha=5.64, c=-16.0, noise=0.25,
                                rho=0.99, seed=11)
        k3 = fit_trend(pl_input, "sigmoid3", seed=0)
        synthetic = LogSeries(pl_input.origin, pl_input.t.copy(),
                              np.asarray(k3.fitted))
        for name, series in (("pl", pl_input), ("sigmoid", synthetic)):
            report = scaleinv_report(series, seed=3)
            assert not report["rolling"]["result"].drift_p < 0.05, name
            assert not report["collapse"]["result"].flagged, name
