"""
Log-density kernels for the prior and likelihood families used by the models.

All functions accept floats, numpy arrays (elementwise) or DualPoints, so they
can be differentiated with hierpool.mathcore.dual.gradient.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np

from hierpool.errors import DomainError
from hierpool.mathcore import dual

logger = logging.getLogger(__name__)

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
LOG_2_OVER_PI = math.log(2.0 / math.pi)

FAMILIES = ('normal', 'half-cauchy', 'uniform-interval', 'lkj-cholesky')


def _check(condition, message):
    if not np.all(condition):
        raise DomainError(message)


def normal_lpdf(x, mu, sd):
    """Gaussian log density, normalizing constant included

    Args:
        x (float | np.ndarray | DualPoint): evaluation point(s)
        mu (float | np.ndarray | DualPoint): location
        sd (float | np.ndarray | DualPoint): standard deviation, strictly positive

    Raises:
        DomainError: sd is not positive

    Returns:
        float | np.ndarray | DualPoint: log density, elementwise
    """
    _check(dual.value_of(sd) > 0, "normal_lpdf: sd must be strictly positive")
    standardized = (x - mu) / sd
    return -dual.log(sd) - HALF_LOG_2PI - 0.5 * standardized * standardized


def half_cauchy_lpdf(x, scale):
    """Half-Cauchy log density on the nonnegative reals: log 2/(pi scale (1 + (x/scale)^2))"""
    _check(dual.value_of(scale) > 0, "half_cauchy_lpdf: scale must be strictly positive")
    _check(dual.value_of(x) >= 0, "half_cauchy_lpdf: x must be nonnegative")
    ratio = x / scale
    return LOG_2_OVER_PI - dual.log(scale) - dual.log1p(ratio * ratio)


def uniform_lpdf(x, lower, upper):
    """Uniform log density on the open interval (lower, upper)"""
    _check(lower < upper, "uniform_lpdf: lower must be below upper")
    value = dual.value_of(x)
    _check((value > lower) & (value < upper), "uniform_lpdf: x outside (lower, upper)")
    result = -math.log(upper - lower)
    return np.full(np.shape(value), result) if np.ndim(value) else result


def lkj_cholesky_coefficients(size, eta):
    """Coefficients c_k of sum_k c_k log L_kk in the LKJ-Cholesky kernel (zero for the first row)"""
    k = np.arange(size)
    coefficients = size - k + 2.0 * eta - 3.0
    coefficients[0] = 0.0
    return coefficients


def lkj_cholesky_lpdf(L, eta):
    """Unnormalized LKJ log density of a correlation Cholesky factor

    The kernel is sum_{k=2..K} (K - k + 2 eta - 2) log L_kk; the normalizing
    constant is omitted because only relative densities matter for sampling.

    Args:
        L (np.ndarray): K x K lower triangular factor, positive diagonal, unit-norm rows
        eta (float): shape, at least 1

    Raises:
        DomainError: eta < 1 or L is not a valid correlation Cholesky factor

    Returns:
        float | DualPoint: log density up to an additive constant
    """
    if eta < 1:
        raise DomainError("lkj_cholesky_lpdf: eta must be >= 1")
    values = np.atleast_2d(dual.value_of(L))
    size = values.shape[0]
    _check(values.shape == (size, size), "lkj_cholesky_lpdf: L must be square")
    _check(np.diag(values) > 0, "lkj_cholesky_lpdf: diagonal must be positive")
    _check(np.abs(np.sum(np.tril(values) ** 2, axis=1) - 1.0) <= 1e-8, "lkj_cholesky_lpdf: rows must have unit norm")

    L = np.atleast_2d(L)
    total = 0.0
    for k, coefficient in enumerate(lkj_cholesky_coefficients(size, eta)):
        if coefficient != 0.0:
            total = total + coefficient * dual.log(L[k, k])
    return total


def cauchy_inv_cdf(w, location, scale):
    """Inverse Cauchy CDF: location + scale * tan(pi (w - 1/2)), strictly increasing in w"""
    value = dual.value_of(w)
    _check((value > 0) & (value < 1), "cauchy_inv_cdf: w must lie in (0, 1)")
    _check(dual.value_of(scale) > 0, "cauchy_inv_cdf: scale must be strictly positive")
    return location + scale * dual.tan(math.pi * (w - 0.5))


@dataclass(frozen=True)
class DensityKernel:
    """A prior or likelihood family with fixed parameters

    Parameters per family:
        normal: (location, scale)
        half-cauchy: (scale,)
        uniform-interval: (lower, upper)
        lkj-cholesky: (eta,)
    """

    family: str
    parameters: tuple

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"Unknown density family '{self.family}'")
        p = self.parameters
        if self.family == 'normal' and not (len(p) == 2 and p[1] > 0):
            raise DomainError("normal kernel needs (location, scale > 0)")
        if self.family == 'half-cauchy' and not (len(p) == 1 and p[0] > 0):
            raise DomainError("half-cauchy kernel needs (scale > 0,)")
        if self.family == 'uniform-interval' and not (len(p) == 2 and p[0] < p[1]):
            raise DomainError("uniform-interval kernel needs (lower, upper) with lower < upper")
        if self.family == 'lkj-cholesky' and not (len(p) == 1 and p[0] >= 1):
            raise DomainError("lkj-cholesky kernel needs (eta >= 1,)")

    def lpdf(self, x):
        """Log density of the family at x (elementwise for 1-D families)"""
        if self.family == 'normal':
            return normal_lpdf(x, *self.parameters)
        if self.family == 'half-cauchy':
            return half_cauchy_lpdf(x, *self.parameters)
        if self.family == 'uniform-interval':
            return uniform_lpdf(x, *self.parameters)
        return lkj_cholesky_lpdf(x, *self.parameters)

    def lpdf_and_grad(self, x):
        """Log density and its derivative with respect to x

        For 1-D families both are elementwise; for lkj-cholesky the derivative is a
        K x K matrix that is non-zero on the diagonal only.
        """
        if self.family == 'normal':
            location, scale = self.parameters
            return normal_lpdf(x, location, scale), -(x - location) / scale ** 2
        if self.family == 'half-cauchy':
            scale, = self.parameters
            return half_cauchy_lpdf(x, scale), -2.0 * x / (scale ** 2 + x * x)
        if self.family == 'uniform-interval':
            return uniform_lpdf(x, *self.parameters), np.zeros(np.shape(x))
        eta, = self.parameters
        L = np.atleast_2d(x)
        coefficients = lkj_cholesky_coefficients(L.shape[0], eta)
        return lkj_cholesky_lpdf(L, eta), np.diag(coefficients / np.diag(L))
