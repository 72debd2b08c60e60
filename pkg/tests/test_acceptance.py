"""Full-length fits on the six reference sites and on synthetic households.

These run the default sampler settings (4 chains, 1000 warmup, 2000 iterations)
and are skipped unless pytest is called with --runslow.
"""

import numpy as np
import pytest

from hierpool.data.models import DEFAULT_SCENARIOS, REFERENCE_SITES, RHAT_THRESHOLD
from hierpool.diagnostics import effective_sample_size, mcse_mean, pooling_report, sensitivity_harness, summarize
from hierpool.models import Model1, Model2, SiteSummary, SyntheticTruth, generate_synthetic_households
from hierpool.sampler import SamplerConfig, run

pytestmark = pytest.mark.slow


# mean, sd and the five reported quantiles of each site effect
SITE_EFFECTS = {
    'Ethiopia': (0.53, 0.06, (0.40, 0.49, 0.53, 0.58, 0.66)),
    'Ghana': (0.22, 0.05, (0.13, 0.19, 0.22, 0.25, 0.32)),
    'Honduras': (0.02, 0.04, (-0.06, -0.01, 0.02, 0.05, 0.11)),
    'India': (0.65, 0.09, (0.48, 0.59, 0.65, 0.71, 0.83)),
    'Pakistan': (0.32, 0.06, (0.20, 0.28, 0.32, 0.36, 0.45)),
    'Peru': (0.09, 0.05, (0.00, 0.06, 0.09, 0.12, 0.18)),
}


@pytest.fixture(scope='module')
def model1_fit():
    sites = [SiteSummary(*row) for row in REFERENCE_SITES]
    fit = run(Model1(sites), SamplerConfig())
    return sites, fit, summarize(fit)


class TestModel1Reference:

    @pytest.mark.parametrize('site', list(SITE_EFFECTS))
    def test_site_effects(self, model1_fit, site):
        _, _, summary = model1_fit
        mean, sd, quantiles = SITE_EFFECTS[site]
        row = summary[f"tau_s[{site}]"]
        assert row.mean == pytest.approx(mean, abs=0.02)
        assert row.sd == pytest.approx(sd, abs=0.03)
        np.testing.assert_allclose(row.quantiles, quantiles, atol=0.04)

    def test_universe_level(self, model1_fit):
        _, _, summary = model1_fit
        assert summary['tau'].mean == pytest.approx(0.31, abs=0.04)
        assert summary['tau'].sd == pytest.approx(0.15, abs=0.04)
        assert summary['sigma'].mean == pytest.approx(0.34, abs=0.05)
        assert summary['sigma'].quantile(0.025) == pytest.approx(0.15, abs=0.04)
        assert summary['sigma'].quantile(0.975) == pytest.approx(0.77, abs=0.15)

    def test_converged_without_divergences(self, model1_fit):
        _, fit, summary = model1_fit
        assert fit.total_divergences == 0
        assert summary.max_rhat <= RHAT_THRESHOLD

    def test_pooling(self, model1_fit):
        sites, fit, _ = model1_fit
        report = pooling_report(fit, sites)
        assert report.sigma_tilde == pytest.approx(0.34, abs=0.05)
        assert report.omega_bar == pytest.approx(0.03, abs=0.01)
        np.testing.assert_allclose(report.omega, [0.04, 0.02, 0.02, 0.07, 0.04, 0.02], atol=0.01)

    def test_shrinkage_direction(self, model1_fit):
        """Each site effect moves from its own estimate toward the universe mean, never past it"""
        sites, fit, summary = model1_fit
        tau = summary['tau'].mean
        for site in sites:
            name = f"tau_s[{site.site_name}]"
            slack = 3.0 * mcse_mean(fit.parameter(name))
            assert min(site.tau_hat, tau) - slack <= summary[name].mean <= max(site.tau_hat, tau) + slack, name

    def test_random_walk_agrees(self, model1_fit):
        sites, fit, _ = model1_fit
        random_walk = run(Model1(sites), SamplerConfig(method='rwm', warmup=2000, iterations=12000))
        for name in fit.parameter_names:
            hmc_draws, rw_draws = fit.parameter(name), random_walk.parameter(name)
            combined = np.hypot(mcse_mean(hmc_draws), mcse_mean(rw_draws))
            assert abs(hmc_draws.mean() - rw_draws.mean()) < 3.0 * combined, name


def test_sensitivity_scenarios(reference_sites):
    rows = {row.scenario: row for row in sensitivity_harness(reference_sites, DEFAULT_SCENARIOS)}
    assert all(row.ok for row in rows.values())
    assert rows['original'].sigma_tilde == pytest.approx(0.34, abs=0.05)
    assert rows['original'].omega_bar == pytest.approx(0.03, abs=0.01)
    assert rows['tau*10'].sigma_tilde == pytest.approx(3.34, abs=0.5)
    assert rows['tau*10'].omega_bar <= 0.005
    assert rows['tau*0.1'].sigma_tilde == pytest.approx(0.03, abs=0.05)
    assert rows['tau*0.1'].omega_bar == pytest.approx(0.78, abs=0.05)
    assert rows['sigma*10'].sigma_tilde == pytest.approx(0.31, abs=0.05)
    assert rows['sigma*10'].omega_bar == pytest.approx(0.77, abs=0.05)
    assert rows['sigma*0.1'].sigma_tilde == pytest.approx(0.38, abs=0.06)
    assert rows['sigma*0.1'].omega_bar <= 0.005
    assert rows['equalize=Ethiopia'].sigma_tilde == pytest.approx(0.31, abs=0.05)
    assert rows['equalize=Ethiopia'].omega_bar == pytest.approx(0.768, abs=0.05)


MODEL2_REPLICATIONS = 40


def test_model2_treatment_coverage():
    """Credible intervals of the site treatment effects cover the simulated truth at their nominal rate"""
    z = np.column_stack([np.ones(6), [0, 1, 1, 1, 1, 1], [7.98, 6.0, 4.75, 6.53, 3.75, 17.14]])
    gamma = [[0.5, 0.1, 0.01], [0.3, -0.2, 0.02]]
    covered, close = [], []
    for replication in range(MODEL2_REPLICATIONS):
        truth = SyntheticTruth.draw(gamma, [0.4, 0.2], 0.3, np.full(6, 0.8), z, seed=replication)
        data = generate_synthetic_households(truth, [500] * 6, seed=1000 + replication)
        fit = run(Model2(data.design, data.y), SamplerConfig(seed=replication + 1, target_accept=0.9))
        summary = summarize(fit)
        for s in range(6):
            row = summary[f"beta[2,{s + 1}]"]
            low, high = row.interval
            covered.append(low < truth.beta[1, s] < high)
            close.append(abs(row.mean - truth.beta[1, s]) < 3.0 * row.sd)

    assert 0.85 <= np.mean(covered) <= 1.0
    assert np.mean(close) >= 0.95


def conjugate_posterior(tau_hat, sigma_hat, sigma, tau_sd=np.sqrt(5.0)):
    """Mean and covariance of (tau, tau_1, ..., tau_S) when sigma is known"""
    size = len(tau_hat)
    precision = np.zeros((size + 1, size + 1))
    precision[0, 0] = 1.0 / tau_sd ** 2 + size / sigma ** 2
    precision[0, 1:] = precision[1:, 0] = -1.0 / sigma ** 2
    precision[1:, 1:] = np.diag(1.0 / sigma ** 2 + 1.0 / sigma_hat ** 2)
    covariance = np.linalg.inv(precision)
    shift = np.concatenate([[0.0], tau_hat / sigma_hat ** 2])
    return covariance @ shift, covariance


@pytest.mark.parametrize('config_seed', range(5))
def test_known_scale_matches_conjugate_posterior(config_seed):
    rng = np.random.default_rng(config_seed)
    tau_hat = rng.normal(0.0, 0.5, size=2)
    sigma_hat = rng.uniform(0.05, 0.5, size=2)
    sigma = rng.uniform(0.1, 1.0)
    sites = [SiteSummary(name, t, s) for name, t, s in zip('AB', tau_hat, sigma_hat)]
    fit = run(Model1(sites, fixed_sigma=sigma), SamplerConfig(seed=config_seed + 1, target_accept=0.9))

    mean, covariance = conjugate_posterior(tau_hat, sigma_hat, sigma)
    for k, name in enumerate(['tau', 'tau_s[A]', 'tau_s[B]']):
        draws = fit.parameter(name)
        ess = effective_sample_size(draws).value
        sd = np.sqrt(covariance[k, k])
        assert abs(draws.mean() - mean[k]) < 3.0 * mcse_mean(draws), name
        # standard error of a Gaussian sample sd is sd / sqrt(2 ESS)
        assert abs(draws.std(ddof=1) - sd) < 4.0 * sd / np.sqrt(2.0 * ess), name
