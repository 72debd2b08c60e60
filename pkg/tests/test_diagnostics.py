"""Convergence diagnostics, posterior summaries, pooling factors and the sensitivity harness."""

import math

import numpy as np
import pytest
from scipy import stats

from hierpool.diagnostics import (QUANTILES, PoolingReport, Scenario, effective_sample_size, histogram, mcse_mean,
                                  parse_scenario, parse_scenarios, pooling_factor, random_effects_baseline,
                                  sensitivity_frame, sensitivity_harness, shrinkage_table, split_rhat, summarize)
from hierpool.diagnostics.sensitivity import SensitivityRow
from hierpool.errors import DomainError, ShapeError, UsageError, ValidationError
from hierpool.models import SiteSummary
from hierpool.sampler import SamplerConfig


def ar1(rng, phi, chains, draws):
    x = np.empty((chains, draws))
    x[:, 0] = rng.standard_normal(chains) / math.sqrt(1.0 - phi ** 2)
    for t in range(1, draws):
        x[:, t] = phi * x[:, t - 1] + rng.standard_normal(chains)
    return x


class TestSplitRhat:

    def test_identical_halves_give_one(self):
        half = np.random.default_rng(42).normal(size=50)
        draws = np.tile(np.concatenate([half, half]), (4, 1))
        value, degenerate = split_rhat(draws)
        assert value == 1.0
        assert not degenerate

    def test_constant(self):
        assert split_rhat(np.ones((4, 100))) == (1.0, True)

    def test_iid(self):
        draws = np.random.default_rng(42).normal(size=(4, 1000))
        assert float(split_rhat(draws)) < 1.01

    def test_shifted_chains(self):
        rng = np.random.default_rng(42)
        draws = rng.normal(size=(4, 500)) + np.array([[0.0], [0.0], [3.0], [3.0]])
        assert float(split_rhat(draws)) > 1.1

    def test_trend_within_chain(self):
        """Split chains catch a drift that unsplit chains with equal means would miss"""
        rng = np.random.default_rng(42)
        draws = np.tile(np.linspace(-2.0, 2.0, 400), (4, 1)) + 0.1 * rng.normal(size=(4, 400))
        assert float(split_rhat(draws)) > 1.5

    def test_too_short(self):
        with pytest.raises(DomainError):
            split_rhat(np.ones((4, 1)))


class TestEffectiveSampleSize:

    def test_iid(self):
        draws = np.random.default_rng(42).normal(size=(4, 1000))
        assert 3200 < effective_sample_size(draws).value < 4800

    def test_autocorrelated(self):
        """AR(1) with phi = 0.9 keeps about (1 - phi) / (1 + phi) of the draws"""
        draws = ar1(np.random.default_rng(42), 0.9, 4, 5000)
        ess = effective_sample_size(draws).value
        assert 700 < ess < 1500

    def test_anticorrelated_is_clamped(self):
        draws = ar1(np.random.default_rng(42), -0.9, 2, 1000)
        assert effective_sample_size(draws).value <= 1.5 * draws.size

    def test_constant(self):
        assert effective_sample_size(np.full((2, 50), 3.0)) == (100.0, True)

    def test_too_few(self):
        with pytest.raises(DomainError):
            effective_sample_size(np.ones(9))

    def test_mcse(self):
        draws = np.random.default_rng(42).normal(size=(4, 1000))
        assert 0.013 < mcse_mean(draws) < 0.019


class TestSummarize:

    def test_four_values(self):
        summary = summarize(np.array([1.0, 2.0, 3.0, 4.0]).reshape(1, 4, 1), ['x'])
        row = summary['x']
        assert row.mean == pytest.approx(2.5)
        assert row.sd == pytest.approx(math.sqrt(5.0 / 3.0))
        assert row.quantiles == pytest.approx((1.075, 1.75, 2.5, 3.25, 3.925))
        assert row.rhat == pytest.approx(math.sqrt(5.0))
        assert math.isnan(row.ess)

    def test_single_draw(self):
        row = summarize(np.array([[[2.0]]]), ['x'])['x']
        assert row.sd == 0.0
        assert math.isnan(row.rhat)

    def test_two_dimensional_input(self):
        draws = np.random.default_rng(42).normal(size=(100, 2))
        summary = summarize(draws, ['a', 'b'])
        assert summary.names == ['a', 'b']
        assert summary['b'].mean == pytest.approx(draws[:, 1].mean())

    def test_quantile_accuracy(self):
        draws = np.random.default_rng(42).normal(size=(4, 250000, 1))
        row = summarize(draws, ['x'])['x']
        np.testing.assert_allclose(row.quantiles, stats.norm.ppf(QUANTILES), atol=0.01)
        assert row.interval[0] == pytest.approx(-1.96, abs=0.01)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(42)
        draws = rng.gamma(2.0, size=(2, 300, 1))
        shuffled = rng.permutation(draws.ravel()).reshape(draws.shape)
        first, second = summarize(draws, ['x'])['x'], summarize(shuffled, ['x'])['x']
        assert first.mean == pytest.approx(second.mean, rel=1e-12)
        assert first.sd == pytest.approx(second.sd, rel=1e-12)
        assert first.quantiles == pytest.approx(second.quantiles, rel=1e-12)

    def test_names_must_match(self):
        with pytest.raises(ShapeError):
            summarize(np.zeros((1, 10, 2)), ['only'])

    def test_frame_and_max_rhat(self):
        rng = np.random.default_rng(42)
        draws = rng.normal(size=(2, 50, 2))
        draws[1, :, 1] += 5.0
        summary = summarize(draws, ['a', 'b'])
        frame = summary.to_frame()
        assert list(frame.columns) == ['parameter', 'mean', 'sd', 'q2.5', 'q25', 'q50', 'q75', 'q97.5', 'rhat',
                                       'ess']
        assert summary.max_rhat == pytest.approx(summary['b'].rhat)
        assert 'a' in summary and len(summary) == 2

    def test_histogram(self):
        values = np.random.default_rng(42).normal(size=5000)
        edges, counts = histogram(values)
        assert edges.size == 61 and counts.size == 60
        assert counts.sum() <= values.size
        edges, counts = histogram(np.full(20, 1.5))
        assert counts.sum() == 20


class TestPoolingFactor:

    def test_values(self):
        assert pooling_factor(1.0, 1.0) == pytest.approx(0.5)
        assert pooling_factor(0.066, 0.34) == pytest.approx(0.004356 / 0.119956)

    def test_monotone(self):
        sigma_hat = np.linspace(0.01, 1.0, 50)
        assert np.all(np.diff(pooling_factor(sigma_hat, 0.3)) > 0)
        values = [pooling_factor(0.1, s) for s in np.linspace(0.01, 1.0, 50)]
        assert np.all(np.diff(values) < 0)

    def test_rejects_non_positive(self):
        with pytest.raises(DomainError):
            pooling_factor(0.0, 0.3)
        with pytest.raises(DomainError):
            pooling_factor(0.1, 0.0)

    def test_reference_sites(self, reference_sites):
        """Per-site factors at sigma_tilde = 0.34, rounded to two decimals"""
        report = PoolingReport.from_scale(0.34, reference_sites)
        np.testing.assert_allclose(np.round(report.omega, 2), [0.04, 0.02, 0.02, 0.07, 0.04, 0.02])
        assert report.omega_bar == pytest.approx(0.03, abs=0.005)

    @pytest.mark.parametrize('scenario, sigma_tilde, omega_bar, tolerance', [
        ('original', 0.34, 0.03, 0.005),
        ('tau*10', 3.34, 0.0, 0.005),
        ('tau*0.1', 0.03, 0.78, 0.01),
        ('sigma*10', 0.31, 0.77, 0.01),
        ('sigma*0.1', 0.38, 0.0, 0.005),
    ])
    def test_scaling_rows(self, reference_sites, scenario, sigma_tilde, omega_bar, tolerance):
        sites = parse_scenario(scenario).apply(reference_sites)
        assert PoolingReport.from_scale(sigma_tilde, sites).omega_bar == pytest.approx(omega_bar, abs=tolerance)

    def test_symmetric_in_site_order(self, reference_sites):
        forward = PoolingReport.from_scale(0.34, reference_sites)
        backward = PoolingReport.from_scale(0.34, reference_sites[::-1])
        np.testing.assert_allclose(forward.omega, backward.omega[::-1])
        assert forward.omega_bar == pytest.approx(backward.omega_bar)

    def test_frame(self, reference_sites):
        frame = PoolingReport.from_scale(0.34, reference_sites).to_frame()
        assert list(frame.columns) == ['site', 'sigma_hat', 'omega_s']
        assert frame['site'].tolist()[0] == 'Ethiopia'


class TestRandomEffectsBaseline:

    def test_homogeneous_sites(self):
        sites = [SiteSummary(f"s{i}", 0.2, 0.1) for i in range(5)]
        baseline = random_effects_baseline(sites)
        assert baseline.fixed_mean == pytest.approx(0.2)
        assert baseline.tau_squared == 0.0
        assert baseline.i_squared == 0.0
        assert baseline.random_mean == pytest.approx(0.2)
        assert baseline.fixed_se == pytest.approx(0.1 / math.sqrt(5.0))

    def test_two_sites(self):
        sites = [SiteSummary('a', 0.0, 1.0), SiteSummary('b', 4.0, 1.0)]
        baseline = random_effects_baseline(sites)
        # Q = 8, C = 1, tau^2 = Q - 1
        assert baseline.q_statistic == pytest.approx(8.0)
        assert baseline.tau_squared == pytest.approx(7.0)
        assert baseline.tau == pytest.approx(math.sqrt(7.0))
        assert baseline.i_squared == pytest.approx(7.0 / 8.0)
        assert baseline.random_mean == pytest.approx(2.0)

    def test_reference_sites_are_heterogeneous(self, reference_sites):
        baseline = random_effects_baseline(reference_sites)
        assert baseline.i_squared > 0.9
        assert 0.15 < baseline.tau < 0.35

    def test_shrinkage_table(self, reference_sites):
        rng = np.random.default_rng(42)
        names = ['tau', 'sigma'] + [f"tau_s[{s.site_name}]" for s in reference_sites]
        draws = np.concatenate([[0.3, 0.3], [0.5 * s.tau_hat + 0.15 for s in reference_sites]])
        draws = np.tile(draws, (1, 20, 1)) + 1e-3 * rng.normal(size=(1, 20, len(names)))
        table = shrinkage_table(summarize(draws, names), reference_sites)
        assert table['site'].tolist() == [s.site_name for s in reference_sites]
        np.testing.assert_allclose(table['shrinkage'], 0.5, atol=0.05)


class TestScenarios:

    def test_parse(self):
        assert parse_scenario('original') == Scenario('original')
        scenario = parse_scenario('tau*10')
        assert scenario.operations[0].kind == 'tau' and scenario.operations[0].factor == 10.0
        assert parse_scenario('equalize=Ethiopia').operations[0].site == 'Ethiopia'
        assert len(parse_scenario('tau*2&sigma*0.5').operations) == 2

    @pytest.mark.parametrize('token', ['tau+10', 'sigma*', 'mu*2', 'tau*0', 'equal=Peru'])
    def test_parse_errors(self, token):
        with pytest.raises(UsageError):
            parse_scenario(token)

    def test_apply(self, reference_sites):
        scaled = parse_scenario('tau*10').apply(reference_sites)
        assert scaled[0].tau_hat == pytest.approx(5.4)
        assert scaled[0].sigma_hat == pytest.approx(0.066)
        equalized = parse_scenario('equalize=Ethiopia').apply(reference_sites)
        assert {s.tau_hat for s in equalized} == {0.54}
        both = parse_scenario('equalize=Ghana&sigma*2').apply(reference_sites)
        assert both[3].tau_hat == pytest.approx(0.22)
        assert both[3].sigma_hat == pytest.approx(0.18)

    def test_unknown_site(self, reference_sites):
        with pytest.raises(UsageError):
            parse_scenario('equalize=Atlantis').apply(reference_sites)

    def test_harness_validates_first(self, reference_sites):
        with pytest.raises(UsageError):
            sensitivity_harness(reference_sites, ['original', 'equalize=Atlantis'])
        with pytest.raises(ValidationError):
            sensitivity_harness([], ['original'])

    def test_harness_rows(self, reference_sites):
        config = SamplerConfig(chains=1, warmup=100, iterations=150, target_accept=0.8, max_steps=8)
        rows = sensitivity_harness(reference_sites, parse_scenarios(['original', 'sigma*10']), config)
        assert [row.scenario for row in rows] == ['original', 'sigma*10']
        assert all(row.ok for row in rows)
        assert all(row.sigma_tilde > 0 and 0 < row.omega_bar < 1 for row in rows)
        assert rows[1].omega_bar > rows[0].omega_bar

    def test_frame_keeps_failures(self):
        frame = sensitivity_frame([SensitivityRow('original', 0.34, 0.03), SensitivityRow('tau*10', error='boom')])
        assert list(frame.columns) == ['scenario', 'sigma_tilde', 'omega_bar']
        assert math.isnan(frame['sigma_tilde'].iloc[1])
