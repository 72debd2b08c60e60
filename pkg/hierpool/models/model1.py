"""
Model 1: partial pooling of site-level effect estimates.

    tau_hat_s ~ N(tau_s, sigma_hat_s^2),   tau_s = tau + sigma * eta_s,   eta_s ~ N(0, 1)
    tau ~ N(0, 5) (sd sqrt(5)),   sigma ~ half-Cauchy(0, 5)

Every parametrization describes this same posterior and reports the same draws
(tau, sigma, tau_s, eta); they only change the coordinates the sampler moves in.
A non-centered site is sampled through eta_s, a centered site through tau_s
directly. 'auto' centers the sites whose estimate is sharper than the spread
between sites: there the likelihood pins tau_s and eta_s would be tied to sigma.

The unconstrained vector lists sites sorted by name, so a fit does not depend on
the order the sites were given in. Outputs follow the order of the input.
"""

from dataclasses import dataclass, field
import logging
import math
from typing import Optional, Sequence

import numpy as np

from hierpool.errors import ConfigurationError
from hierpool.mathcore import DensityKernel, PositiveLogTransform, normal_lpdf
from hierpool.models.core import ModelInterface, SiteSummary, check_sites, dersimonian_laird

logger = logging.getLogger(__name__)

PARAMETRIZATIONS = ('auto', 'noncentered', 'centered')


@dataclass(frozen=True)
class PriorConfig:
    """Hyper-prior settings: tau ~ N(0, tau_sd), sigma ~ half-Cauchy(0, sigma_scale)"""

    tau_sd: float = math.sqrt(5.0)
    sigma_scale: float = 5.0

    def __post_init__(self):
        if not (self.tau_sd > 0 and self.sigma_scale > 0):
            raise ConfigurationError("prior scales must be strictly positive")


@dataclass(frozen=True, eq=False)
class Model1Parameters:
    """Universe-level mean tau, heterogeneity scale sigma and standardized site deviations eta"""

    tau: float
    sigma: float
    eta: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def tau_s(self):
        """Site effects, always recomputed from (tau, sigma, eta)"""
        return self.tau + self.sigma * np.asarray(self.eta, dtype=float)


class Model1(ModelInterface):
    """Model 1 on a sequence of SiteSummary records

    Args:
        sites: site estimates, any order
        priors: hyper-prior scales, defaults to PriorConfig()
        parametrization: 'auto', 'noncentered' or 'centered'
        fixed_sigma: hold sigma at this known value instead of sampling it
    """

    def __init__(self, sites: Sequence[SiteSummary], priors: PriorConfig = None,
                 parametrization: str = 'auto', fixed_sigma: Optional[float] = None):
        check_sites(sites)
        if parametrization not in PARAMETRIZATIONS:
            raise ConfigurationError(f"Unknown parametrization '{parametrization}', expected one of "
                                     f"{PARAMETRIZATIONS}")
        if fixed_sigma is not None and not fixed_sigma > 0:
            raise ConfigurationError("fixed_sigma must be strictly positive")

        self.sites = tuple(sites)
        self.priors = priors or PriorConfig()
        self.parametrization = parametrization
        self.fixed_sigma = fixed_sigma

        self.tau_hat = np.array([s.tau_hat for s in self.sites])
        self.sigma_hat = np.array([s.sigma_hat for s in self.sites])
        self.site_names = [s.site_name for s in self.sites]

        # sampler coordinate k holds input site order[k]
        self.order = np.array(sorted(range(len(self.sites)), key=lambda i: self.site_names[i]), dtype=int)
        self._tau_hat = self.tau_hat[self.order]
        self._sigma_hat = self.sigma_hat[self.order]
        self.centered = self._centering(parametrization)

        self.tau_prior = DensityKernel('normal', (0.0, self.priors.tau_sd))
        self.sigma_prior = DensityKernel('half-cauchy', (self.priors.sigma_scale,))
        self.sigma_transform = PositiveLogTransform()
        self._offset = 1 if fixed_sigma is not None else 2

        if parametrization == 'auto':
            logger.debug('Centering %d of %d sites: %s', self.centered.sum(), self.n_sites,
                         [self.site_names[i] for i in self.order[self.centered]])

    def _centering(self, parametrization):
        if parametrization == 'centered':
            return np.ones(self.n_sites, dtype=bool)
        if parametrization == 'noncentered':
            return np.zeros(self.n_sites, dtype=bool)
        if self.fixed_sigma is not None:
            scale = self.fixed_sigma
        else:
            scale = math.sqrt(dersimonian_laird(self._tau_hat, self._sigma_hat ** 2)[1])
        return self._sigma_hat < scale

    @property
    def n_sites(self):
        return len(self.sites)

    @property
    def dimension(self):
        return self._offset + self.n_sites

    @property
    def parameter_names(self):
        return ['tau', 'sigma'] + [f"tau_s[{name}]" for name in self.site_names] + \
               [f"eta[{name}]" for name in self.site_names]

    def to_site_order(self, values):
        """Per-site values in sampler order, rearranged into input order"""
        values = np.asarray(values)
        out = np.empty_like(values)
        out[self.order] = values
        return out

    def from_site_order(self, values):
        """Per-site values in input order, rearranged into sampler order"""
        return np.asarray(values)[self.order]

    def _split(self, z):
        z = self.check_dimension(z)
        if self.fixed_sigma is not None:
            return z[0], None, z[1:]
        return z[0], z[1], z[2:]

    def log_density(self, z):
        tau, log_sigma, rest = self._split(z)
        lp = self.tau_prior.lpdf(tau)
        if log_sigma is None:
            sigma, log_sigma = self.fixed_sigma, math.log(self.fixed_sigma)
        else:
            sigma, log_jacobian = self.sigma_transform.constrain(log_sigma)
            lp = lp + self.sigma_prior.lpdf(sigma) + log_jacobian

        tau_s = np.where(self.centered, rest, tau + sigma * rest)
        eta = np.where(self.centered, (rest - tau) / sigma, rest)
        lp = lp + np.sum(normal_lpdf(eta, 0.0, 1.0)) - int(self.centered.sum()) * log_sigma
        return lp + np.sum(normal_lpdf(self._tau_hat, tau_s, self._sigma_hat))

    def log_density_and_gradient(self, z):
        tau, log_sigma, rest = self._split(np.asarray(z, dtype=float))
        grad = np.empty(self.dimension)
        centered = self.centered

        lp, dtau = self.tau_prior.lpdf_and_grad(tau)
        if log_sigma is None:
            sigma, dsigma = self.fixed_sigma, 0.0
            lp -= centered.sum() * math.log(sigma)
        else:
            sigma = np.exp(log_sigma)
            prior, dsigma = self.sigma_prior.lpdf_and_grad(sigma)
            lp += prior + log_sigma - centered.sum() * log_sigma

        tau_s = np.where(centered, rest, tau + sigma * rest)
        eta = np.where(centered, (rest - tau) / sigma, rest)
        residual = (self._tau_hat - tau_s) / self._sigma_hat ** 2
        lp += np.sum(normal_lpdf(eta, 0.0, 1.0)) + np.sum(normal_lpdf(self._tau_hat, tau_s, self._sigma_hat))

        grad[0] = dtau + np.sum(np.where(centered, eta / sigma, residual))
        grad[self._offset:] = np.where(centered, residual - eta / sigma, sigma * residual - eta)
        if log_sigma is not None:
            dsigma += np.sum(np.where(centered, (eta ** 2 - 1.0) / sigma, residual * eta))
            grad[1] = dsigma * sigma + 1.0
        return float(lp), grad

    def constrain(self, z):
        tau, log_sigma, rest = self._split(np.asarray(z, dtype=float))
        sigma = self.fixed_sigma if log_sigma is None else np.exp(log_sigma)
        eta = np.where(self.centered, (rest - tau) / sigma, rest)
        return Model1Parameters(tau=float(tau), sigma=float(sigma), eta=self.to_site_order(eta))

    def unconstrain(self, params: Model1Parameters):
        head = [params.tau] if self.fixed_sigma is not None else [params.tau, math.log(params.sigma)]
        eta = self.from_site_order(np.asarray(params.eta, dtype=float))
        tau_s = params.tau + params.sigma * eta
        return np.concatenate([head, np.where(self.centered, tau_s, eta)])

    def constrained_vector(self, z):
        params = self.constrain(z)
        return np.concatenate([[params.tau, params.sigma], params.tau_s, params.eta])


def _noncentered(z, sites, priors=None):
    model = Model1(sites, priors, parametrization='noncentered')
    z = model.check_dimension(z)
    return model, np.concatenate([z[:2], model.from_site_order(z[2:])])


def model1_log_density(z, sites, priors=None):
    """Non-centered Model 1 log-density and gradient at the unconstrained point (tau, log sigma, eta)

    eta is aligned with sites; the gradient comes back in the same layout.
    """
    model, z = _noncentered(np.asarray(z, dtype=float), sites, priors)
    lp, grad = model.log_density_and_gradient(z)
    return lp, np.concatenate([grad[:2], model.to_site_order(grad[2:])])


def model1_constrain(z, sites=None):
    """Constrained Model 1 parameters for (tau, log sigma, eta_1..eta_S)

    Raises:
        ShapeError: z does not have length S + 2 (when sites are given)
    """
    z = np.asarray(z, dtype=float)
    if sites is None:
        sites = [SiteSummary(f"site{i + 1}", 0.0, 1.0) for i in range(max(z.size - 2, 1))]
    model, z = _noncentered(z, sites)
    return model.constrain(z)
