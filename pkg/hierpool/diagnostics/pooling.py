"""
Pooling analysis of a Model 1 fit and the frequentist random-effects baseline it is compared with.

The pooling factor of site s is omega_s = sigma_hat_s^2 / (sigma_tilde^2 + sigma_hat_s^2), with
sigma_tilde the posterior mean of the heterogeneity scale. omega_s near 1 means the site's
posterior is driven by the other sites, near 0 by its own estimate.
"""

from dataclasses import dataclass
import logging
import math
from typing import Sequence

import numpy as np
import pandas as pd

from hierpool.errors import DomainError
from hierpool.models.core import SiteSummary, check_sites, dersimonian_laird

logger = logging.getLogger(__name__)


def pooling_factor(sigma_hat, sigma_tilde):
    """Pooling factor sigma_hat^2 / (sigma_tilde^2 + sigma_hat^2)

    Args:
        sigma_hat (float | np.ndarray): site standard error(s), strictly positive
        sigma_tilde (float): heterogeneity scale, strictly positive

    Raises:
        DomainError: non-positive argument

    Returns:
        float | np.ndarray: value(s) in (0, 1)
    """
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    if np.any(sigma_hat <= 0) or not sigma_tilde > 0:
        raise DomainError("pooling factor needs strictly positive sigma_hat and sigma_tilde")
    omega = sigma_hat ** 2 / (sigma_tilde ** 2 + sigma_hat ** 2)
    return float(omega) if omega.ndim == 0 else omega


@dataclass(frozen=True, eq=False)
class PoolingReport:
    """Posterior mean heterogeneity scale, per-site pooling factors and their average"""

    sigma_tilde: float
    site_names: tuple
    sigma_hat: np.ndarray
    omega: np.ndarray

    @property
    def omega_bar(self):
        return float(np.mean(self.omega))

    @classmethod
    def from_scale(cls, sigma_tilde, sites: Sequence[SiteSummary]):
        sigma_hat = np.array([s.sigma_hat for s in sites])
        return cls(sigma_tilde=float(sigma_tilde), site_names=tuple(s.site_name for s in sites),
                   sigma_hat=sigma_hat, omega=np.atleast_1d(pooling_factor(sigma_hat, sigma_tilde)))

    def to_frame(self):
        return pd.DataFrame({'site': self.site_names, 'sigma_hat': self.sigma_hat, 'omega_s': self.omega})


def pooling_report(fit, sites: Sequence[SiteSummary]):
    """Pooling report of a Model 1 fit

    Args:
        fit (ChainDraws): draws carrying a 'sigma' parameter
        sites (Sequence[SiteSummary]): the data the model was fitted on

    Returns:
        PoolingReport: sigma_tilde = posterior mean of sigma, omega_s per site
    """
    check_sites(sites)
    sigma_tilde = float(np.mean(fit.parameter('sigma')))
    report = PoolingReport.from_scale(sigma_tilde, sites)
    logger.debug("Pooling: sigma_tilde=%.4f omega_bar=%.4f", report.sigma_tilde, report.omega_bar)
    return report


@dataclass(frozen=True)
class RandomEffectsBaseline:
    """Inverse-variance and DerSimonian-Laird random-effects estimates"""

    fixed_mean: float
    fixed_se: float
    tau_squared: float
    random_mean: float
    random_se: float
    q_statistic: float
    i_squared: float

    @property
    def tau(self):
        return math.sqrt(self.tau_squared)


def random_effects_baseline(sites: Sequence[SiteSummary]):
    """Frequentist counterpart of Model 1

    Full pooling weighs each site by 1 / sigma_hat^2. The between-site variance
    uses the DerSimonian-Laird moment estimator, truncated at zero, and the
    random-effects mean reweighs by 1 / (sigma_hat^2 + tau^2).
    """
    check_sites(sites)
    effects = np.array([s.tau_hat for s in sites])
    variances = np.array([s.sigma_hat for s in sites]) ** 2
    weights = 1.0 / variances
    fixed_mean = float(np.sum(weights * effects) / np.sum(weights))
    k = len(sites)

    q, tau_squared = dersimonian_laird(effects, variances)
    i_squared = max(0.0, (q - (k - 1)) / q) if q > 0 else 0.0

    random_weights = 1.0 / (variances + tau_squared)
    random_mean = float(np.sum(random_weights * effects) / np.sum(random_weights))
    return RandomEffectsBaseline(fixed_mean=fixed_mean, fixed_se=math.sqrt(1.0 / np.sum(weights)),
                                 tau_squared=tau_squared, random_mean=random_mean,
                                 random_se=math.sqrt(1.0 / np.sum(random_weights)), q_statistic=q,
                                 i_squared=i_squared)


def shrinkage_table(summary, sites: Sequence[SiteSummary]):
    """No-pooling estimate, posterior mean of tau_s and the share of the gap to tau closed by pooling, per site"""
    tau_mean = summary['tau'].mean
    rows = []
    for site in sites:
        posterior = summary[f"tau_s[{site.site_name}]"].mean
        gap = site.tau_hat - tau_mean
        rows.append({'site': site.site_name, 'tau_hat': site.tau_hat, 'posterior_mean': posterior,
                     'shrinkage': (site.tau_hat - posterior) / gap if gap != 0 else math.nan})
    return pd.DataFrame(rows)
