"""
Model 2: household-level regression with site-varying coefficients.

    y_i ~ N(X_i beta_{site[i]}, sigma_{site[i]}^2)
    beta = gamma Z^T + diag(theta) L_Omega u,   u ~ N(0, 1) entrywise
    theta_k = 2.5 tan(theta_unif_k),  theta_unif_k ~ U(0, pi/2)   (half-Cauchy(0, 2.5) by inverse CDF)
    L_Omega ~ LKJ-Cholesky(eta),  gamma ~ N(0, 5) entrywise (sd sqrt(5)),  sigma_s ~ U(0, 100000)

The covariance Sigma = diag(theta) Omega diag(theta) is never formed while
evaluating the density; it is only derived for reporting.

Unconstrained layout: gamma (I*J) | u (I*S) | theta_unif (I) | L_Omega (I(I-1)/2) | sigma_s (S)
"""

from dataclasses import dataclass
import logging
import math

import numpy as np

from hierpool.errors import ConfigurationError, ShapeError
from hierpool.mathcore import (CholeskyCorrelationTransform, DensityKernel, IntervalTransform, cauchy_inv_cdf,
                               normal_lpdf, uniform_lpdf)
from hierpool.models.core import DesignMatrices, ModelInterface

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Model2Priors:
    """Prior settings for Model 2"""

    gamma_sd: float = math.sqrt(5.0)
    lkj_eta: float = 2.0
    theta_scale: float = 2.5
    sigma_upper: float = 100000.0

    def __post_init__(self):
        if not (self.gamma_sd > 0 and self.theta_scale > 0 and self.sigma_upper > 0):
            raise ConfigurationError("Model 2 prior scales must be strictly positive")
        if self.lkj_eta < 1:
            raise ConfigurationError("LKJ shape eta must be >= 1")


@dataclass(frozen=True, eq=False)
class Model2Parameters:
    """Sampled Model 2 quantities and the ones derived from them"""

    gamma: np.ndarray
    u: np.ndarray
    theta_unif: np.ndarray
    L_Omega: np.ndarray
    sigma_s: np.ndarray
    theta_scale: float = 2.5

    @property
    def theta(self):
        return self.theta_scale * np.tan(self.theta_unif)

    @property
    def Omega(self):
        return self.L_Omega @ self.L_Omega.T

    @property
    def Sigma(self):
        theta = self.theta
        return theta[:, None] * self.Omega * theta[None, :]

    @property
    def rho(self):
        """Correlation between the first two coefficients (I >= 2)"""
        return self.Omega[0, 1]

    def mu(self, Z):
        """Prior mean of beta, gamma Z^T (I x S)"""
        return self.gamma @ np.asarray(Z, dtype=float).T

    def beta(self, Z):
        return model2_beta(self.gamma, Z, self.theta, self.L_Omega, self.u)


def model2_beta(gamma, Z, theta, L_Omega, u):
    """Site coefficients beta = gamma Z^T + diag(theta) L_Omega u

    Args:
        gamma (np.ndarray): I x J site-level regression coefficients
        Z (np.ndarray): S x J site-level predictors
        theta (np.ndarray): I coefficient scales
        L_Omega (np.ndarray): I x I correlation Cholesky factor
        u (np.ndarray): I x S standardized deviates

    Raises:
        ShapeError: inconsistent shapes

    Returns:
        np.ndarray: I x S matrix whose column s holds beta_s
    """
    gamma, Z, u = np.atleast_2d(gamma), np.atleast_2d(Z), np.atleast_2d(u)
    theta, L_Omega = np.atleast_1d(theta), np.atleast_2d(L_Omega)
    I, J = gamma.shape
    S = Z.shape[0]
    if Z.shape[1] != J or u.shape != (I, S) or theta.shape != (I,) or L_Omega.shape != (I, I):
        raise ShapeError(f"inconsistent shapes: gamma {gamma.shape}, Z {Z.shape}, theta {theta.shape}, "
                         f"L_Omega {L_Omega.shape}, u {u.shape}")
    return gamma @ Z.T + (theta[:, None] * L_Omega) @ u


class Model2(ModelInterface):
    """Model 2 on a design (X, Z, site) and an outcome vector y"""

    def __init__(self, design: DesignMatrices, y, priors: Model2Priors = None):
        self.design = design
        self.y = np.asarray(y, dtype=float)
        if self.y.shape != (design.n_households,):
            raise ShapeError(f"y has shape {self.y.shape}, expected ({design.n_households},)")
        self.priors = priors or Model2Priors()

        self.I = design.n_predictors
        self.J = design.n_site_predictors
        self.S = design.n_sites
        self.X = design.X
        self.Z = design.Z
        self.site = design.site - 1
        self.onehot = np.zeros((design.n_households, self.S))
        self.onehot[np.arange(design.n_households), self.site] = 1.0
        self.counts = self.onehot.sum(axis=0)

        self.gamma_prior = DensityKernel('normal', (0.0, self.priors.gamma_sd))
        self.lkj_prior = DensityKernel('lkj-cholesky', (self.priors.lkj_eta,))
        self.theta_transform = IntervalTransform(0.0, math.pi / 2.0, shape=self.I)
        self.cholesky_transform = CholeskyCorrelationTransform(self.I)
        self.sigma_transform = IntervalTransform(0.0, self.priors.sigma_upper, shape=self.S)

        sizes = [self.I * self.J, self.I * self.S, self.I, self.cholesky_transform.size, self.S]
        bounds = np.cumsum([0] + sizes)
        self.slices = {name: slice(bounds[k], bounds[k + 1])
                       for k, name in enumerate(('gamma', 'u', 'theta_unif', 'L_Omega', 'sigma_s'))}
        self._dimension = int(bounds[-1])

    @property
    def dimension(self):
        return self._dimension

    @property
    def parameter_names(self):
        names = [f"gamma[{k + 1},{j + 1}]" for k in range(self.I) for j in range(self.J)]
        names += [f"beta[{k + 1},{s + 1}]" for k in range(self.I) for s in range(self.S)]
        names += [f"theta[{k + 1}]" for k in range(self.I)]
        names += [f"Omega[{a + 1},{b + 1}]" for a in range(self.I) for b in range(a + 1, self.I)]
        names += [f"sigma_s[{s + 1}]" for s in range(self.S)]
        return names

    def _blocks(self, z):
        z = self.check_dimension(z)
        return (z[self.slices['gamma']].reshape(self.I, self.J), z[self.slices['u']].reshape(self.I, self.S),
                z[self.slices['theta_unif']], z[self.slices['L_Omega']], z[self.slices['sigma_s']])

    def linear_predictor(self, beta):
        """X_i . beta_{site[i]} for every household"""
        return np.sum(self.X * beta[:, self.site].T, axis=1)

    def log_likelihood(self, beta, sigma_s):
        return np.sum(normal_lpdf(self.y, self.linear_predictor(beta), sigma_s[self.site]))

    def log_density(self, z):
        gamma, u, theta_raw, L_raw, sigma_raw = self._blocks(z)
        theta_unif, theta_jacobian = self.theta_transform.constrain(theta_raw)
        L_Omega, L_jacobian = self.cholesky_transform.constrain(L_raw)
        sigma_s, sigma_jacobian = self.sigma_transform.constrain(sigma_raw)
        theta = cauchy_inv_cdf(theta_unif / math.pi + 0.5, 0.0, self.priors.theta_scale)

        beta = model2_beta(gamma, self.Z, theta, L_Omega, u)
        lp = self.log_likelihood(beta, sigma_s)
        lp = lp + np.sum(normal_lpdf(u, 0.0, 1.0)) + np.sum(self.gamma_prior.lpdf(gamma))
        lp = lp + self.lkj_prior.lpdf(L_Omega)
        lp = lp + np.sum(uniform_lpdf(theta_unif, 0.0, math.pi / 2.0))
        lp = lp + np.sum(uniform_lpdf(sigma_s, 0.0, self.priors.sigma_upper))
        return lp + np.sum(theta_jacobian) + L_jacobian + np.sum(sigma_jacobian)

    def log_density_and_gradient(self, z):
        gamma, u, theta_raw, L_raw, sigma_raw = self._blocks(np.asarray(z, dtype=float))
        theta_unif, theta_jacobian, dtheta_unif, dtheta_jacobian = \
            self.theta_transform.constrain_with_derivative(theta_raw)
        L_Omega, L_jacobian, dL, dL_jacobian = self.cholesky_transform.constrain_with_derivative(L_raw)
        sigma_s, sigma_jacobian, dsigma, dsigma_jacobian = self.sigma_transform.constrain_with_derivative(sigma_raw)
        scale = self.priors.theta_scale
        theta = scale * np.tan(theta_unif)

        scaled_L = theta[:, None] * L_Omega
        L_u = L_Omega @ u
        beta = gamma @ self.Z.T + theta[:, None] * L_u

        mean = self.linear_predictor(beta)
        residual = self.y - mean
        sd = sigma_s[self.site]
        lp = np.sum(normal_lpdf(self.y, mean, sd))
        weighted = residual / sd ** 2
        # d loglik / d beta, one column per site
        dbeta = (self.X * weighted[:, None]).T @ self.onehot
        dsigma_s = -self.counts / sigma_s + (self.onehot.T @ residual ** 2) / sigma_s ** 3

        gamma_lp, gamma_grad = self.gamma_prior.lpdf_and_grad(gamma)
        lkj_lp, lkj_grad = self.lkj_prior.lpdf_and_grad(L_Omega)
        lp += np.sum(normal_lpdf(u, 0.0, 1.0)) + np.sum(gamma_lp) + lkj_lp
        lp += -self.I * math.log(math.pi / 2.0) - self.S * math.log(self.priors.sigma_upper)
        lp += np.sum(theta_jacobian) + L_jacobian + np.sum(sigma_jacobian)

        grad = np.empty(self.dimension)
        grad[self.slices['gamma']] = (dbeta @ self.Z + gamma_grad).ravel()
        grad[self.slices['u']] = (scaled_L.T @ dbeta - u).ravel()
        dtheta = np.sum(dbeta * L_u, axis=1)
        grad[self.slices['theta_unif']] = dtheta * scale / np.cos(theta_unif) ** 2 * dtheta_unif + dtheta_jacobian
        dL_matrix = theta[:, None] * (dbeta @ u.T) + lkj_grad
        grad[self.slices['L_Omega']] = np.einsum('ab,abm->m', dL_matrix, dL) + dL_jacobian
        grad[self.slices['sigma_s']] = dsigma_s * dsigma + dsigma_jacobian
        return float(lp), grad

    def constrain(self, z):
        gamma, u, theta_raw, L_raw, sigma_raw = self._blocks(np.asarray(z, dtype=float))
        theta_unif, _ = self.theta_transform.constrain(theta_raw)
        L_Omega, _ = self.cholesky_transform.constrain(L_raw)
        sigma_s, _ = self.sigma_transform.constrain(sigma_raw)
        return Model2Parameters(gamma=gamma.copy(), u=u.copy(), theta_unif=np.asarray(theta_unif),
                                L_Omega=np.asarray(L_Omega, dtype=float), sigma_s=np.asarray(sigma_s),
                                theta_scale=self.priors.theta_scale)

    def unconstrain(self, params: Model2Parameters):
        return np.concatenate([
            np.asarray(params.gamma, dtype=float).ravel(),
            np.asarray(params.u, dtype=float).ravel(),
            self.theta_transform.unconstrain(params.theta_unif),
            self.cholesky_transform.unconstrain(params.L_Omega),
            self.sigma_transform.unconstrain(params.sigma_s),
        ])

    def constrained_vector(self, z):
        params = self.constrain(z)
        upper = np.triu_indices(self.I, k=1)
        return np.concatenate([params.gamma.ravel(), params.beta(self.Z).ravel(), params.theta,
                               params.Omega[upper], params.sigma_s])


def model2_log_density(z, design, y, priors=None):
    """Model 2 log-density and gradient at an unconstrained point"""
    return Model2(design, y, priors).log_density_and_gradient(z)


def naive_log_likelihood(model: Model2, params: Model2Parameters):
    """Household-by-household likelihood loop, kept as an oracle for the vectorized evaluation"""
    beta = params.beta(model.Z)
    total = 0.0
    for i in range(model.design.n_households):
        s = model.site[i]
        mean = sum(model.X[i, k] * beta[k, s] for k in range(model.I))
        total += -math.log(params.sigma_s[s]) - 0.5 * math.log(2.0 * math.pi) \
                 - 0.5 * ((model.y[i] - mean) / params.sigma_s[s]) ** 2
    return total

